import logging
import os
import tempfile
from pathlib import Path
from typing import Dict, List, Optional, Union

from hamiltonians import CoupledSpec, HamiltonianSpec, HamiltonianTerm, InteractionNormalization, Side, couple

logger = logging.getLogger(__name__)

HAM_SUFFIX = ".ham"
FORMAT_TAG = "wormhole-lab hamiltonian"


def spec_to_text(spec: Union[HamiltonianSpec, CoupledSpec]) -> str:
    """Serialize to the `.ham` text format.

    Header lines are `# key: value`; every other line is `coefficient i j k l`.
    A coupled spec stores its left side plus `mu` and `normalization`; the right
    side is rebuilt by couple().
    """
    coupling = None
    if isinstance(spec, CoupledSpec):
        coupling = (spec.mu, spec.normalization)
        spec = spec.left
    lines = [
        f"# {FORMAT_TAG}",
        f"# n_fermions: {spec.n_fermions}",
        f"# side: {spec.side.value}",
        f"# label: {spec.label}",
    ]
    if coupling is not None:
        lines.append(f"# mu: {coupling[0]!r}")
        lines.append(f"# normalization: {coupling[1].value}")
    for term in spec.terms:
        lines.append(" ".join([repr(term.coefficient)] + [str(i) for i in term.support]))
    return "\n".join(lines) + "\n"


def spec_from_text(text: str) -> Union[HamiltonianSpec, CoupledSpec]:
    """Parse the `.ham` text format; raises ValueError on malformed content."""
    header: Dict[str, str] = {}
    terms = []
    for number, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line:
            continue
        if line.startswith("#"):
            key, sep, value = line[1:].partition(":")
            if sep:
                header[key.strip()] = value.strip()
            continue
        fields = line.split()
        if len(fields) != 5:
            raise ValueError(f"Line {number}: expected 'coefficient i j k l', got {raw!r}")
        try:
            coefficient = float(fields[0])
            support = tuple(int(f) for f in fields[1:])
        except ValueError as e:
            raise ValueError(f"Line {number}: {e}") from e
        if list(support) != sorted(support):
            raise ValueError(f"Line {number}: indices must be increasing, got {support}")
        terms.append(HamiltonianTerm(coefficient, support))

    if "n_fermions" not in header:
        raise ValueError("Missing 'n_fermions' header")
    spec = HamiltonianSpec(
        tuple(terms),
        n_fermions=int(header["n_fermions"]),
        side=Side(header.get("side", Side.SINGLE.value)),
        label=header.get("label", ""),
    )
    if "mu" in header:
        normalization = header.get("normalization", InteractionNormalization.PER_FLAVOR.value)
        return couple(spec.on_side(Side.SINGLE), float(header["mu"]), normalization)
    return spec


class HamiltonianFileManager:
    """Manages a directory of `.ham` Hamiltonian files"""

    def __init__(self, ham_dir: Optional[Path] = None):
        if ham_dir is None:
            ham_dir = Path.home() / ".local" / "share" / "wormhole-lab" / "hamiltonians"
        self.ham_dir = Path(ham_dir)
        self.ham_dir.mkdir(parents=True, exist_ok=True)
        logger.info(f"Using Hamiltonian directory: {self.ham_dir}")

    def scan(self) -> List[HamiltonianSpec]:
        """Load every `.ham` file in the directory, skipping unreadable ones"""
        specs = []
        for file_path in sorted(self.ham_dir.glob(f"*{HAM_SUFFIX}")):
            spec = self.load(file_path)
            if spec is not None:
                specs.append(spec)
        logger.info(f"Loaded {len(specs)} Hamiltonians from {self.ham_dir}")
        return specs

    def load(self, file_path: Path) -> Optional[Union[HamiltonianSpec, CoupledSpec]]:
        """Load a single file; malformed content is logged and yields None"""
        try:
            return load_spec(file_path)
        except (OSError, ValueError) as e:
            logger.error(f"Failed to load {file_path}: {e}")
            return None

    def save(self, spec: Union[HamiltonianSpec, CoupledSpec], filename: Optional[str] = None) -> Path:
        if filename is None:
            label = spec.left.label if isinstance(spec, CoupledSpec) else spec.label
            filename = self._sanitize_filename(label or "hamiltonian") + HAM_SUFFIX
        file_path = self.ham_dir / filename
        save_spec(spec, file_path)
        logger.info(f"Saved Hamiltonian to {file_path}")
        return file_path

    def delete(self, file_path: Path) -> bool:
        try:
            Path(file_path).unlink()
            logger.info(f"Deleted {file_path}")
            return True
        except OSError as e:
            logger.error(f"Failed to delete {file_path}: {e}")
            return False

    def import_file(self, source_path: Path) -> Optional[Union[HamiltonianSpec, CoupledSpec]]:
        """Copy a Hamiltonian file from elsewhere into the managed directory"""
        spec = self.load(source_path)
        if spec is not None:
            self.save(spec, Path(source_path).name if Path(source_path).suffix == HAM_SUFFIX else None)
        return spec

    def import_folder(self, folder_path: Path) -> List[Union[HamiltonianSpec, CoupledSpec]]:
        folder_path = Path(folder_path)
        if not folder_path.is_dir():
            logger.error(f"Invalid folder path: {folder_path}")
            return []
        imported = []
        for file_path in sorted(folder_path.glob(f"*{HAM_SUFFIX}")):
            spec = self.import_file(file_path)
            if spec is not None:
                imported.append(spec)
        logger.info(f"Imported {len(imported)} Hamiltonians from {folder_path}")
        return imported

    def validate(self, file_path: Path) -> Dict[str, object]:
        """Check a file without importing it"""
        result = {"valid": False, "errors": [], "warnings": [], "label": None, "n_terms": 0}
        try:
            spec = load_spec(file_path)
        except (OSError, ValueError) as e:
            result["errors"].append(str(e))
            return result
        base = spec.left if isinstance(spec, CoupledSpec) else spec
        result["label"] = base.label
        result["n_terms"] = len(base.terms)
        if not base.terms:
            result["warnings"].append("Hamiltonian has no terms")
        missing = set(range(1, base.n_fermions + 1)) - base.fermions_touched()
        if missing:
            result["warnings"].append(f"Fermions never touched: {sorted(missing)}")
        result["valid"] = True
        return result

    def _sanitize_filename(self, name: str) -> str:
        safe_name = name
        for char in '<>:"/\\|?*+ ':
            safe_name = safe_name.replace(char, '_')
        safe_name = safe_name.strip('._')
        return safe_name or "hamiltonian"


def load_spec(file_path: Path) -> Union[HamiltonianSpec, CoupledSpec]:
    with open(file_path, "r", encoding="utf-8") as f:
        return spec_from_text(f.read())


def save_spec(spec: Union[HamiltonianSpec, CoupledSpec], file_path: Path):
    """Write atomically: temp file in the destination directory, then rename"""
    file_path = Path(file_path)
    file_path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp_path = tempfile.mkstemp(dir=file_path.parent, suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as f:
            f.write(spec_to_text(spec))
        os.replace(tmp_path, file_path)
    except BaseException:
        if os.path.exists(tmp_path):
            os.unlink(tmp_path)
        raise
