import io
import json
import xml.etree.ElementTree as ET

import pytest

from siq.cli import main
from conftest import DATA_DIR

SCENES = str(DATA_DIR / "paper_scenes.jsonl")
VASE = str(DATA_DIR / "vase_scene.jsonl")


def run(capsys, *argv):
    code = main(list(argv))
    captured = capsys.readouterr()
    return code, captured.out, captured.err


def test_query_matches_exit_zero(capsys):
    code, out, _ = run(capsys, "query", "--detections", SCENES,
                       "--q", "FIND FRAMES WHERE person INSIDE car")
    assert code == 0
    assert out.startswith("frame 1\n")
    assert "BB#1-1" in out and "BB#1-2" in out


def test_query_no_matches_exit_one(capsys):
    code, out, _ = run(capsys, "query", "--detections", SCENES,
                       "--q", "FIND FRAMES WHERE dog INSIDE car")
    assert code == 1
    assert out == ""


def test_query_bad_syntax_exit_two(capsys):
    code, _, err = run(capsys, "query", "--detections", SCENES,
                       "--q", "FIND FRAMES WHERE person NEXT_TO car")
    assert code == 2
    assert "unknown relation" in err


def test_query_missing_file_exit_two(capsys):
    code, _, err = run(capsys, "query", "--detections", "/nonexistent.jsonl",
                       "--q", "FIND FRAMES WHERE a ON b")
    assert code == 2
    assert "error" in err


def test_query_output_is_deterministic(capsys):
    args = ("query", "--detections", SCENES,
            "--q", "FIND FRAMES WHERE person WITH tie")
    _, first, _ = run(capsys, *args)
    _, second, _ = run(capsys, *args)
    assert first == second


def test_json_format_agrees_with_text(capsys):
    query = "FIND FRAMES WHERE person LEFT_OF car"
    _, text_out, _ = run(capsys, "query", "--detections", SCENES, "--q", query)
    _, json_out, _ = run(capsys, "query", "--detections", SCENES,
                         "--q", query, "--format", "json")
    text_frames = [line.split()[1] for line in text_out.splitlines()
                   if line.startswith("frame ")]
    objs = [json.loads(line) for line in json_out.splitlines()]
    assert [o["frame"] for o in objs] == text_frames
    grounding = objs[0]["groundings"][0]["vars"]
    assert grounding["$a"]["label"] == "person"
    assert grounding["$b"]["box"] == [200.0, 80.0, 400.0, 190.0]


def test_explain_appends_log(capsys):
    code, out, _ = run(capsys, "query", "--detections", SCENES,
                       "--q", "FIND FRAMES WHERE person INSIDE car", "--explain")
    assert code == 0
    assert "# rule Inside:" in out


def test_explain_json_log_object(capsys):
    _, out, _ = run(capsys, "query", "--detections", SCENES,
                    "--q", "FIND FRAMES WHERE person INSIDE car",
                    "--format", "json", "--explain")
    last = json.loads(out.splitlines()[-1])
    assert last["log"][0]["rule"] == "Inside"


def test_atomese_query_file(capsys, tmp_path):
    goal = tmp_path / "goal.ats"
    goal.write_text(
        'AndLink\n'
        '  InheritanceLink\n'
        '    VariableNode "$x"\n'
        '    ConceptNode "person"\n'
        '  MemberLink\n'
        '    VariableNode "$x"\n'
        '    VariableNode "$Frame"\n',
        encoding="utf-8")
    code, out, _ = run(capsys, "query", "--detections", SCENES,
                       "--atomese", str(goal))
    assert code == 0
    assert out.count("frame ") >= 5


def test_check_agrees(capsys):
    for query in ("FIND FRAMES WHERE person INSIDE car",
                  "FIND FRAMES WHERE person WITH backpack",
                  "FIND FRAMES WHERE person:p WITH tie AND person:p LEFT_OF car"):
        code, out, _ = run(capsys, "check", "--detections", SCENES, "--q", query)
        assert code == 0, query
        assert out.startswith("ok:")


def test_dump_load_dump_byte_identical(capsys, tmp_path):
    first = tmp_path / "a.ats"
    second = tmp_path / "b.ats"
    code, _, _ = run(capsys, "dump", "--detections", SCENES, "--out", str(first))
    assert code == 0
    code, _, _ = run(capsys, "load", "--in", str(first), "--out", str(second))
    assert code == 0
    assert first.read_bytes() == second.read_bytes()


def test_dump_stdout_parses(capsys):
    code, out, _ = run(capsys, "dump", "--detections", VASE)
    assert code == 0
    from siq import atomese
    assert atomese.parse(out)


def test_ingest_writes_store(capsys, tmp_path):
    out_file = tmp_path / "store.ats"
    code, out, _ = run(capsys, "ingest", "--detections", VASE, "--out", str(out_file))
    assert code == 0
    assert "atoms" in out
    assert out_file.exists()


def test_min_conf_flag_filters(capsys):
    code, _, _ = run(capsys, "query", "--detections", SCENES, "--min-conf", "0.7",
                     "--q", "FIND FRAMES WHERE person WITH tie")
    assert code == 1  # the tie (conf 0.62) is dropped


def test_env_fallback_and_flag_precedence(capsys, monkeypatch):
    query = 'FIND FRAMES WHERE vase ON "dining table"'
    monkeypatch.setenv("SIQ_ON_TAU", "0.05")
    code, _, _ = run(capsys, "query", "--detections", VASE, "--q", query)
    assert code == 1  # env tightened the threshold
    code, out, _ = run(capsys, "query", "--detections", VASE, "--q", query,
                       "--on-tau", "0.15")
    assert code == 0  # flag wins over env
    assert out.startswith("frame 7\n")


def test_repl_session(capsys, monkeypatch):
    monkeypatch.setattr("sys.stdin", io.StringIO(
        "FIND FRAMES WHERE person INSIDE car\n"
        ":params\n"
        ":explain on\n"
        "FIND FRAMES WHERE dog ON car\n"
        "nonsense query\n"
        ":quit\n"
    ))
    code, out, _ = run(capsys, "repl", "--detections", SCENES)
    assert code == 0
    assert "frame 1" in out
    assert "on_tau=0.15" in out
    assert "(no matches)" in out
    assert "error:" in out


def test_render_writes_svg_overlays(capsys, tmp_path):
    out_dir = tmp_path / "svg"
    code, out, _ = run(capsys, "render", "--detections", SCENES,
                       "--q", "FIND FRAMES WHERE person INSIDE car",
                       "--out-dir", str(out_dir))
    assert code == 0
    files = sorted(out_dir.glob("*.svg"))
    assert [f.name for f in files] == ["frame_1.svg"]
    root = ET.parse(files[0]).getroot()
    rects = [el for el in root if el.tag.endswith("rect")]
    texts = [el for el in root if el.tag.endswith("text")]
    assert len(rects) == 2 and len(texts) == 2
    by_x = {float(r.get("x")): r for r in rects}
    person = by_x[150.0]
    assert float(person.get("width")) == 50.0
    assert float(person.get("height")) == 80.0
    # viewport is the box extent plus a 10 px margin on each side
    assert root.get("viewBox") == "90 90 220 140"


def test_render_no_matches_exit_one(capsys, tmp_path):
    code, _, _ = run(capsys, "render", "--detections", SCENES,
                     "--q", "FIND FRAMES WHERE dog ON car",
                     "--out-dir", str(tmp_path / "svg"))
    assert code == 1
    assert not list((tmp_path / "svg").glob("*.svg"))
