from dataclasses import replace

import pytest

from hamiltonian_files import HamiltonianFileManager, load_spec, save_spec, spec_from_text, spec_to_text
from hamiltonians import CoupledSpec, InteractionNormalization, couple, learned_hamiltonian, syk_sample


def test_round_trip_single_spec(tmp_path):
    spec = syk_sample(seed=3)
    path = tmp_path / "syk.ham"
    save_spec(spec, path)
    assert load_spec(path) == spec
    assert spec_to_text(load_spec(path)) == path.read_text()


def test_round_trip_coupled_spec():
    coupled = couple(learned_hamiltonian(), -12.0)
    restored = spec_from_text(spec_to_text(coupled))
    assert isinstance(restored, CoupledSpec)
    assert restored == coupled


def test_coupled_spec_keeps_its_normalization():
    coupled = couple(learned_hamiltonian(), -1.5, InteractionNormalization.BARE)
    text = spec_to_text(coupled)
    assert "# normalization: bare\n" in text
    assert spec_from_text(text).normalization == InteractionNormalization.BARE
    with pytest.raises(ValueError):
        spec_from_text(text.replace("normalization: bare", "normalization: sideways"))


@pytest.mark.parametrize("text", [
    "# n_fermions: 7\n0.5 1 2 3\n",
    "# n_fermions: 7\nabc 1 2 3 4\n",
    "# n_fermions: 7\n0.5 4 3 2 1\n",
    "0.5 1 2 3 4\n",
])
def test_malformed_text_rejected(text):
    with pytest.raises(ValueError):
        spec_from_text(text)


def test_manager_scan_skips_broken_files(tmp_path):
    manager = HamiltonianFileManager(tmp_path)
    manager.save(learned_hamiltonian())
    (tmp_path / "broken.ham").write_text("not a hamiltonian\n")
    specs = manager.scan()
    assert specs == [learned_hamiltonian()]
    assert manager.load(tmp_path / "broken.ham") is None


def test_manager_save_sanitizes_label(tmp_path):
    manager = HamiltonianFileManager(tmp_path)
    path = manager.save(replace(learned_hamiltonian(), label="a/b c"))
    assert path.name == "a_b_c.ham"


def test_manager_import_and_delete(tmp_path):
    source = tmp_path / "source"
    source.mkdir()
    save_spec(learned_hamiltonian(), source / "learned.ham")
    save_spec(syk_sample(seed=1), source / "syk.ham")
    manager = HamiltonianFileManager(tmp_path / "managed")
    imported = manager.import_folder(source)
    assert len(imported) == 2
    assert (tmp_path / "managed" / "learned.ham").exists()
    assert manager.delete(tmp_path / "managed" / "learned.ham")
    assert not manager.delete(tmp_path / "managed" / "learned.ham")
    assert manager.import_folder(tmp_path / "missing") == []


def test_validate_reports_warnings(tmp_path):
    manager = HamiltonianFileManager(tmp_path)
    path = tmp_path / "partial.ham"
    path.write_text("# n_fermions: 8\n0.5 1 2 3 4\n")
    result = manager.validate(path)
    assert result["valid"]
    assert result["n_terms"] == 1
    assert any("never touched" in w for w in result["warnings"])

    bad = tmp_path / "bad.ham"
    bad.write_text("# n_fermions: 7\n0.5 1 2\n")
    assert not manager.validate(bad)["valid"]
