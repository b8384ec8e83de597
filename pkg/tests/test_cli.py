"""End-to-end command-line runs, exit codes, machine-readable reports."""

import json

from fglab.cli import main
from fglab.padic import PrecisionContext
from fglab.serialize import parse, serialize, serialize_extension
from fglab.series import MultiSeries, TupleSeries
from fglab.formal_group import multiplicative_law, additive_law
from fglab.padic import teichmuller

from conftest import cyclotomic_modulus


def run(capsys, *argv):
    code = main(list(argv))
    captured = capsys.readouterr()
    return code, captured.out, captured.err


def test_build_lt2_end_to_end(tmp_path, capsys):
    group = tmp_path / "group.doc"
    logf = tmp_path / "log.doc"
    mulp = tmp_path / "mulp.doc"
    code, out, _ = run(capsys, "build-lt2", "--p", "2", "--h1", "1",
                       "--h2", "1", "--out-group", str(group),
                       "--out-log", str(logf), "--out-mulp", str(mulp),
                       "--format", "machine")
    assert code == 0
    report = json.loads(out)
    assert report["linear_part_is_p_times_identity"] is True
    assert report["frobenius_shape_mod_p"] is True
    law = parse(group.read_text())
    assert law.dimension == 2

    code, out, _ = run(capsys, "validate-group", "--in", str(group),
                       "--format", "machine")
    assert code == 0
    assert json.loads(out)["commutative"] is True

    code, out, _ = run(capsys, "height", "--group", str(group),
                       "--format", "machine")
    assert code == 0
    rep = json.loads(out)
    assert rep["height"] == "2" and rep["kernel_order"] == "4"


def test_validate_group_axiom_violation_exit_code(tmp_path, capsys):
    ctx = PrecisionContext(5, 10, 6)
    bad = TupleSeries([MultiSeries.from_terms(
        ctx, 2, {(1, 0): 1, (0, 1): 1, (2, 0): 1})])
    path = tmp_path / "bad.doc"
    path.write_text(serialize(bad, kind="tuple"))
    code, _, err = run(capsys, "validate-group", "--in", str(path))
    assert code == 10
    assert "unit" in err


def test_mul_map_and_negation(tmp_path, capsys):
    ctx = PrecisionContext(5, 12, 8)
    M = multiplicative_law(ctx)
    gpath = tmp_path / "m.doc"
    gpath.write_text(serialize(M))
    out_path = tmp_path / "three.doc"
    code, _, _ = run(capsys, "mul-map", "--in", str(gpath), "--a", "3",
                     "--out", str(out_path))
    assert code == 0
    series = parse(out_path.read_text())
    assert series[0].coefficient((2,)).same_at_working_precision(3)
    code, out, _ = run(capsys, "negation", "--in", str(gpath))
    assert code == 0
    assert "fglab-series" in out


def test_reconstruct_and_singular_exit(tmp_path, capsys):
    ctx = PrecisionContext(2, 20, 10)
    M = multiplicative_law(ctx)
    from fglab.formal_group import fg_multiplication_map
    u = fg_multiplication_map(M, 2).series
    upath = tmp_path / "u.doc"
    upath.write_text(serialize(u, kind="tuple"))
    hpath = tmp_path / "h.doc"
    code, _, _ = run(capsys, "reconstruct", "--u", str(upath), "--j0", "3",
                     "--out", str(hpath))
    assert code == 0
    h = parse(hpath.read_text())
    assert h[0].coefficient((1,)).same_at_working_precision(3)

    # gamma fixture: SingularStep exit code names the degree on stderr
    ctx5 = PrecisionContext(5, 16, 8)
    g = teichmuller(2, ctx5)
    ug = TupleSeries([MultiSeries.variable(ctx5, 2, 0).scale(g),
                      MultiSeries.variable(ctx5, 2, 1).scale(g)])
    ugpath = tmp_path / "ug.doc"
    ugpath.write_text(serialize(ug, kind="tuple"))
    code, _, err = run(capsys, "reconstruct", "--u", str(ugpath),
                       "--j0", "2,0;0,2")
    assert code == 11
    assert "degree 5" in err


def test_stability_report(tmp_path, capsys):
    ctx5 = PrecisionContext(5, 16, 8)
    g = teichmuller(2, ctx5)
    ug = TupleSeries([MultiSeries.variable(ctx5, 2, 0).scale(g),
                      MultiSeries.variable(ctx5, 2, 1).scale(g)])
    path = tmp_path / "ug.doc"
    path.write_text(serialize(ug, kind="tuple"))
    code, out, _ = run(capsys, "stability", "--u", str(path),
                       "--format", "machine")
    assert code == 0
    rep = json.loads(out)
    assert rep["stable"] is False and rep["reason"] == "root-of-unity"


def test_copolygon_and_bound_check(tmp_path, capsys):
    ctx = PrecisionContext(5, 12, 8)
    f = MultiSeries.from_terms(ctx, 2, {(0, 0): 5, (1, 0): 1, (1, 2): 1})
    fpath = tmp_path / "f.doc"
    fpath.write_text(serialize(f))
    code, out, _ = run(capsys, "copolygon", "--in", str(fpath),
                       "--xi", "1,1", "--format", "machine")
    assert code == 0
    rep = json.loads(out)
    assert rep["value"] == "1"

    ext = tmp_path / "base.ext"
    from fglab.padic import ExtensionModulus
    ext.write_text(serialize_extension(ExtensionModulus.base(ctx)))
    code, out, _ = run(capsys, "bound-check", "--in", str(fpath),
                       "--extension", str(ext), "--point", "5;5",
                       "--format", "machine")
    assert code == 0
    rep = json.loads(out)
    assert rep["holds"] is True


def test_orbit_and_torsion_and_intersect(tmp_path, capsys):
    ctx = PrecisionContext(5, 14, 8)
    M = multiplicative_law(ctx)
    A = additive_law(ctx, 1)
    mpath = tmp_path / "m.doc"
    apath = tmp_path / "a.doc"
    mpath.write_text(serialize(M))
    apath.write_text(serialize(A))
    ext1 = tmp_path / "cyc1.ext"
    ext1.write_text(serialize_extension(cyclotomic_modulus(ctx, 1)))

    from fglab.formal_group import fg_multiplication_map
    u = fg_multiplication_map(M, 6).series
    upath = tmp_path / "u6.doc"
    upath.write_text(serialize(u, kind="endo"))
    code, out, _ = run(capsys, "orbit", "--map", str(upath),
                       "--extension", str(ext1), "--point", "0 1",
                       "--budget", "6", "--polynomial",
                       "--format", "machine")
    assert code == 0
    rep = json.loads(out)
    assert rep["status"] == "periodic" and rep["tail"] == 0

    code, out, _ = run(capsys, "torsion", "--group", str(mpath),
                       "--level", "1", "--extension", str(ext1),
                       "--format", "machine")
    assert code == 0
    rep = json.loads(out)
    assert rep["count"] == 5 and rep["verdict"] == "complete-in-extension"

    code, out1, _ = run(capsys, "intersect", "--group", str(mpath),
                        "--group2", str(apath), "--level", "1",
                        "--extension", str(ext1), "--format", "machine")
    assert code == 0
    rep = json.loads(out1)
    assert rep["shared_count"] == 1
    # determinism: byte-identical reruns
    code, out2, _ = run(capsys, "intersect", "--group", str(mpath),
                        "--group2", str(apath), "--level", "1",
                        "--extension", str(ext1), "--format", "machine")
    assert out2 == out1


def test_parse_error_exit_code(tmp_path, capsys):
    bad = tmp_path / "bad.doc"
    bad.write_text("garbage\n")
    code, _, err = run(capsys, "validate-group", "--in", str(bad))
    assert code == 13


def test_build_lt2_with_explicit_degree(tmp_path, capsys):
    group = tmp_path / "g8.doc"
    code, out, _ = run(capsys, "build-lt2", "--p", "2", "--h1", "1",
                       "--h2", "1", "--degree", "8", "--out-group",
                       str(group), "--format", "machine")
    assert code == 0
    rep = json.loads(out)
    assert rep["degree"] == 8 and rep["certified_degree"] == 8
    assert rep["frobenius_shape_mod_p"] is True


def test_table_format_output(tmp_path, capsys):
    ctx = PrecisionContext(5, 10, 6)
    M = multiplicative_law(ctx)
    gpath = tmp_path / "m.doc"
    gpath.write_text(serialize(M))
    code, out, _ = run(capsys, "height", "--group", str(gpath))
    assert code == 0
    assert "height: 1" in out
    assert "kernel_order: 5" in out


def test_report_written_to_file(tmp_path, capsys):
    ctx = PrecisionContext(5, 10, 6)
    M = multiplicative_law(ctx)
    gpath = tmp_path / "m.doc"
    gpath.write_text(serialize(M))
    out_path = tmp_path / "report.json"
    code, out, _ = run(capsys, "height", "--group", str(gpath),
                       "--format", "machine", "--out", str(out_path))
    assert code == 0 and out == ""
    assert json.loads(out_path.read_text())["height"] == "1"
