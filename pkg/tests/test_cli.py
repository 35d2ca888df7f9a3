from __future__ import annotations

import json
import subprocess
import sys
import time

import pytest

from conftest import corpus_path, kinds_and_functions, scan
from corpus_defs import CORPUS, FIXTURES, MALFORMED, MANIFEST, documents, expected_manifest
from irbuild import assign, block, cast, fn, gen, op, package, prim, ptr, use
from typeconf.cli import main
from typeconf.detectors import BugKind
from typeconf.report import render_report
from typeconf.scan import Config, ScanSummary, expand_inputs, run_scan
from typeconf.semantics import ArchWidth


def run_cli(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


# -- rendering ---------------------------------------------------------------

def test_empty_render():
    empty = ScanSummary([])
    assert render_report(empty, "text").strip().endswith("0 findings (I: 0, II: 0, III: 0)")
    assert json.loads(render_report(empty, "json"))["reports"] == []


def test_text_shows_both_sites():
    text = render_report(scan("rand_core"), "text")
    assert "BlockRng::fill_bytes:bb1[0]" in text
    assert "BlockRng::fill_bytes:bb1[1]" in text
    assert "T1-ConCon-align-mod" in text


def test_reports_sorted():
    summary = scan("xous_string", "lmdb", "rand_core")
    keys = [r.sort_key() for r in summary.reports]
    assert keys == sorted(keys)
    data = json.loads(render_report(summary, "json"))
    assert [(r["package"], r["function"]) for r in data["reports"]] == [k[:2] for k in keys]


def test_json_schema_fields():
    data = json.loads(render_report(scan("lmdb"), "json"))
    for r in data["reports"]:
        assert set(r) >= {"package", "function", "bug_type", "rule_id", "src_type", "dst_type", "operation",
                          "conversion_site", "evidence", "suppressions_considered", "witness", "arches"}
    (padding,) = [r for r in data["reports"] if r["bug_type"] == "II"]
    assert padding["witness"] == "Padding"


def test_totals_match_reports():
    summary = scan(*FIXTURES)
    counts = {k: 0 for k in ("I", "II", "III")}
    for r in summary.reports:
        counts[r.finding.kind.short] += 1
    assert summary.totals == counts


# -- exit codes --------------------------------------------------------------

def test_exit_codes(capsys):
    assert run_cli(capsys, str(corpus_path("clean_safe_casts")))[0] == 0
    assert run_cli(capsys, str(corpus_path("rand_core")))[0] == 1
    assert run_cli(capsys, str(CORPUS / "malformed" / "not_json.json"))[0] == 2
    assert run_cli(capsys, str(corpus_path("rand_core")), str(CORPUS / "malformed"))[0] == 2


def test_missing_file_is_parse_error(tmp_path):
    summary = run_scan(Config(inputs=(str(tmp_path / "absent.json"),)))
    (p,) = summary.packages
    assert p.status == "parse_error" and p.error
    assert summary.exit_code == 2


def test_malformed_entries_reported(capsys):
    code, out, _ = run_cli(capsys, "--format", "json", str(CORPUS / "malformed"))
    data = json.loads(out)
    assert code == 2
    assert sorted(p["status"] for p in data["packages"]) == ["parse_error"] * len(MALFORMED)


def test_usage_errors(capsys):
    for argv in ([], ["--jobs", "0", "x"], ["--detectors", "IV", "x"], ["--arch", "16", "x"]):
        with pytest.raises(SystemExit) as exc:
            main(argv)
        assert exc.value.code == 2
    capsys.readouterr()


# -- options -----------------------------------------------------------------

def test_detector_subset(capsys):
    paths = [str(corpus_path(n)) for n in ("rand_core", "prettytable", "rgb")]
    code, out, _ = run_cli(capsys, "--detectors", "I", "--format", "json", *paths)
    data = json.loads(out)
    assert code == 1
    assert [(r["bug_type"], r["function"]) for r in data["reports"]] == [("I", "BlockRng::fill_bytes")]
    summary = scan("lmdb", detectors=frozenset({BugKind.MISMATCHED_SCOPE}))
    assert kinds_and_functions(summary) == [("III", "bool::from_mdb_value")]


def test_arch_selection():
    on32 = scan("external_hint", arches=frozenset({ArchWidth.BITS32}))
    on64 = scan("external_hint", arches=frozenset({ArchWidth.BITS64}))
    assert kinds_and_functions(on32) == kinds_and_functions(on64)
    for r in on32.reports:
        if r.finding.kind is BugKind.MISALIGNMENT:
            assert r.finding.arches == (ArchWidth.BITS32,)


def test_output_file(capsys, tmp_path):
    dest = tmp_path / "out.json"
    code, out, _ = run_cli(capsys, "--format", "json", "-o", str(dest), str(corpus_path("rgb")))
    assert code == 1 and out == ""
    assert json.loads(dest.read_text())["totals"]["III"] == 1


def test_dumps(capsys, tmp_path):
    _, _, err = run_cli(capsys, str(corpus_path("rand_core")), "--dump-alias-dot")
    assert err.startswith("digraph") and "BlockRng::fill_bytes" in err
    dest = tmp_path / "pg.json"
    run_cli(capsys, "--dump-property-graph", str(dest), str(corpus_path("arrow_buffer")))
    data = json.loads(dest.read_text())
    assert "BufferBuilder::as_slice" in json.dumps(data)


def test_trait_overlay_defines_unknown_bound(tmp_path):
    # An unknown bound leaves T unconstrained; once the overlay says only u8
    # implements it, the u8 -> T read is harmless. The function is private so
    # the synthetic padded aggregate stays out of the candidates.
    doc = package("ext", [fn("read", visibility="private", unsafe=True, generics=[("T", ["Decodable"])], params=[ptr(prim("u8"))],
                             ret=gen("T"), locals=[(2, ptr(gen("T")))],
                             blocks=[block(assign(2, cast(op(1), ptr(prim("u8")), ptr(gen("T")))),
                                           assign(0, use(op(2, deref=True))))])])
    src = tmp_path / "ext.json"
    src.write_text(json.dumps(doc))
    before = run_scan(Config(inputs=(str(src),)))
    assert kinds_and_functions(before) == [("I", "read"), ("III", "read")]
    overlay = tmp_path / "traits.json"
    overlay.write_text(json.dumps([{"name": "Decodable", "implementors": [{"kind": "primitive", "name": "u8"}]}]))
    assert run_scan(Config(inputs=(str(src),), trait_overlay=str(overlay))).reports == []


def test_suppression_overlay(tmp_path):
    overlay = tmp_path / "checks.json"
    overlay.write_text(json.dumps({"BlockRngCore::generate": {"I": "post"}}))
    assert scan("rand_core", suppression_overlay=str(overlay)).reports == []


def test_tiny_timeout():
    summary = scan("lmdb", timeout=1e-9)
    (p,) = summary.packages
    assert p.status == "timeout" and p.reports == []
    assert summary.exit_code == 0


# -- corpus ------------------------------------------------------------------

def test_corpus_on_disk_is_current():
    for name, text in documents().items():
        assert (CORPUS / f"{name}.json").read_text() == text, name
    for name, text in MALFORMED.items():
        assert (CORPUS / "malformed" / f"{name}.json").read_text() == text + "\n"
    assert json.loads(MANIFEST.read_text()) == expected_manifest()


def test_corpus_size():
    assert len(expand_inputs([str(CORPUS)])) == len(FIXTURES) >= 20


@pytest.mark.parametrize("mode", ["interprocedural", "no_interprocedural"])
def test_manifest_matches_scan(fixture_name, mode):
    expected = json.loads(MANIFEST.read_text())[fixture_name][mode]
    summary = scan(fixture_name, interprocedural=(mode == "interprocedural"))
    assert [list(x) for x in kinds_and_functions(summary)] == expected


def test_jobs_determinism(capsys):
    _, one, _ = run_cli(capsys, "--format", "json", "--jobs", "1", str(CORPUS))
    _, four, _ = run_cli(capsys, "--format", "json", "--jobs", "4", str(CORPUS))
    assert one == four


def test_input_order_irrelevant():
    names = sorted(FIXTURES)
    a = render_report(scan(*names), "json")
    b = render_report(scan(*reversed(names)), "json")
    assert json.loads(a)["reports"] == json.loads(b)["reports"]


def test_full_corpus_under_a_minute():
    start = time.monotonic()
    summary = run_scan(Config(inputs=(str(CORPUS),)))
    assert time.monotonic() - start < 60
    assert all(p.status == "ok" for p in summary.packages)


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "typeconf", "--format", "json", str(corpus_path("rgb"))],
                          capture_output=True, text=True, timeout=60)
    assert proc.returncode == 1
    assert json.loads(proc.stdout)["totals"] == {"I": 0, "II": 0, "III": 1}
