"""Script parsing, deterministic replay, golden comparison, and the CLI."""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np
import pytest

from nudgekit.cli import main as cli_main
from nudgekit.frame_pipeline import laplacian_variance, ssim
from nudgekit.scenario_runner import (
    GoldenMissing,
    MissingAsset,
    ScriptInvalid,
    bundled_scenario_path,
    compare_golden,
    compare_golden_file,
    load_script,
    parse_script,
    run,
    synth_pixels,
)

GOLDENS = Path(__file__).parent / "goldens"

PROFILE = {
    "user_id": "u-script",
    "goal": "maintain a nutritious diet, be active, and overall live a healthy and balanced life",
    "role_traits": "health conscious and think about the long-term consequences over short-term needs",
    "voice_ref": "voice-1",
    "quiet_threshold_ms": 3000,
}


def minimal_script(events, **providers) -> dict:
    providers.setdefault("mode", "mock")
    providers.setdefault("strict", False)
    providers.setdefault("completer_default", "Okay.")
    providers.setdefault("classifier_default", "Output: yes")
    return {
        "version": 1,
        "name": "inline",
        "profile": PROFILE,
        "providers": providers,
        "events": events,
    }


# -- synthetic frames ---------------------------------------------------------------


def test_hashnoise_is_sharp_and_deterministic():
    a = synth_pixels({"hashnoise": {"seed": 5, "size": [16, 16]}})
    b = synth_pixels({"hashnoise": {"seed": 5, "size": [16, 16]}})
    assert np.array_equal(a, b)
    assert laplacian_variance(a) >= 25.0


def test_different_seeds_are_distinct_under_ssim():
    a = synth_pixels({"hashnoise": {"seed": 11, "size": [24, 32]}})
    b = synth_pixels({"hashnoise": {"seed": 22, "size": [24, 32]}})
    assert ssim(a, b) < 0.95


def test_constant_generator_is_blurry():
    img = synth_pixels({"constant": {"value": 99, "size": [8, 8]}})
    assert laplacian_variance(img) == 0.0


def test_checker_generator_shape_and_values():
    img = synth_pixels({"checker": {"cell": 2, "size": [4, 4]}})
    assert img.shape == (4, 4)
    assert set(np.unique(img)) == {0.0, 255.0}


def test_unknown_generator_rejected():
    with pytest.raises(ScriptInvalid):
        synth_pixels({"vortex": {}})


def test_missing_file_asset(tmp_path):
    with pytest.raises(MissingAsset):
        synth_pixels({"file": "nope.png"}, base_dir=tmp_path)


def test_file_frames_decode(tmp_path):
    from PIL import Image

    array = (np.arange(64).reshape(8, 8) * 3 % 256).astype(np.uint8)
    Image.fromarray(array, mode="L").save(tmp_path / "frame.png")
    pixels = synth_pixels({"file": "frame.png"}, base_dir=tmp_path)
    assert pixels.shape == (8, 8)
    assert np.array_equal(pixels, array.astype(np.float64))


# -- script validation ------------------------------------------------------------------


def test_version_required():
    with pytest.raises(ScriptInvalid):
        parse_script({"profile": PROFILE, "events": []})


def test_profile_required():
    with pytest.raises(ScriptInvalid):
        parse_script({"version": 1, "events": []})


def test_unknown_event_kind_rejected():
    with pytest.raises(ScriptInvalid):
        parse_script(minimal_script([{"at_ms": 0, "kind": "teleport"}]))


def test_events_sorted_even_if_script_is_not():
    script = parse_script(
        minimal_script(
            [
                {"at_ms": 500, "kind": "utterance", "text": "later"},
                {"at_ms": 100, "kind": "utterance", "text": "earlier"},
            ]
        )
    )
    assert [e.at_ms for e in script.events] == [100, 500]


def test_burst_expands_to_frames():
    script = parse_script(
        minimal_script(
            [
                {
                    "at_ms": 0,
                    "kind": "frame_burst",
                    "count": 4,
                    "interval_ms": 200,
                    "image": {"constant": {"value": 1, "size": [4, 4]}},
                }
            ]
        )
    )
    assert [e.at_ms for e in script.events] == [0, 200, 400, 600]
    assert all(e.kind == "frame" for e in script.events)


# -- replay ------------------------------------------------------------------------------


def test_blurry_only_script_yields_no_observations_or_nudges():
    script = parse_script(
        minimal_script(
            [
                {
                    "at_ms": 0,
                    "kind": "frame_burst",
                    "count": 10,
                    "interval_ms": 200,
                    "image": {"constant": {"value": 128, "size": [8, 8]}},
                }
            ]
        )
    )
    result = run(script)
    assert result.metrics["observation_count"] == 0
    assert result.metrics["nudge_count"] == 0
    assert result.metrics["batch_count"] == 1


def test_same_script_runs_byte_identical():
    script_doc = minimal_script(
        [
            {
                "at_ms": 0,
                "kind": "frame_burst",
                "count": 10,
                "interval_ms": 200,
                "image": {"hashnoise": {"seed": 9, "size": [16, 16]}},
            },
            {"at_ms": 6000, "kind": "utterance", "text": "I am feeling hungry."},
        ]
    )
    first = run(parse_script(script_doc))
    second = run(parse_script(script_doc))
    assert first.log_text() == second.log_text()
    assert first.metrics == second.metrics


def test_frame_conservation_counts():
    script = parse_script(
        minimal_script(
            [
                {
                    "at_ms": 0,
                    "kind": "frame_burst",
                    "count": 23,
                    "interval_ms": 100,
                    "image": {"hashnoise": {"seed": 3, "size": [8, 8]}},
                }
            ]
        )
    )
    metrics = run(script).metrics
    assert metrics["frames_pushed"] == 23
    assert metrics["batch_count"] == 2
    assert metrics["frames_kept"] + metrics["frames_dropped"] == 20
    assert metrics["frames_unbatched"] == 3


@pytest.mark.parametrize(
    "name", ["healthy_diet", "work_focus", "confident_conversation"]
)
def test_bundled_scenarios_match_their_goldens(name):
    result = run(load_script(bundled_scenario_path(name)))
    diff = compare_golden_file(result, GOLDENS / f"scenario_{name}.jsonl")
    assert diff.empty, diff.report()


def test_confident_scenario_defers_while_other_speaker_talks():
    result = run(load_script(bundled_scenario_path("confident_conversation")))
    injected_at = next(
        e.ts_ms for e in result.log if e.type == "new_info_injected" and "call has ended" in e.payload["text"]
    )
    final_nudge = next(
        e for e in result.log if e.type == "agent_response" and e.payload["text"].startswith("Well done")
    )
    toggle_off = max(
        e.ts_ms
        for e in result.log
        if e.type == "inject"
        and e.payload.get("kind") == "other_speaker_toggle"
        and e.payload.get("active") is False
    )
    assert injected_at < toggle_off < final_nudge.ts_ms


# -- golden comparison ---------------------------------------------------------------------


def test_compare_log_with_itself_is_empty():
    lines = ['{"a":1}', '{"b":2}']
    assert compare_golden(lines, lines).empty


def test_extra_event_listed():
    golden = ['{"a":1}']
    log = ['{"a":1}', '{"extra":true}']
    diff = compare_golden(log, golden)
    assert not diff.empty
    assert any("extra event" in entry for entry in diff.entries)


def test_reordered_events_flag_first_divergence():
    golden = ["e0", "e1", "e2"]
    log = ["e0", "e2", "e1"]
    diff = compare_golden(log, golden)
    assert not diff.empty
    assert diff.entries[0].startswith("event 1:")


def test_golden_missing_raises(tmp_path):
    result = run(parse_script(minimal_script([])))
    with pytest.raises(GoldenMissing):
        compare_golden_file(result, tmp_path / "ghost.jsonl")


# -- CLI -------------------------------------------------------------------------------------


def _write_script(tmp_path, doc) -> Path:
    path = tmp_path / "script.json"
    path.write_text(json.dumps(doc), encoding="utf-8")
    return path


def test_cli_run_writes_log_and_metrics(tmp_path, capsys):
    script = _write_script(
        tmp_path, minimal_script([{"at_ms": 0, "kind": "utterance", "text": "hello"}])
    )
    out = tmp_path / "log.jsonl"
    metrics = tmp_path / "metrics.json"
    code = cli_main(["run", str(script), "--out", str(out), "--metrics", str(metrics)])
    assert code == 0
    assert out.exists() and metrics.exists()
    parsed = json.loads(metrics.read_text(encoding="utf-8"))
    assert parsed["nudge_count"] == 1


def test_cli_golden_pass_and_mismatch(tmp_path):
    doc = minimal_script([{"at_ms": 0, "kind": "utterance", "text": "hello"}])
    script = _write_script(tmp_path, doc)
    out = tmp_path / "log.jsonl"
    assert cli_main(["run", str(script), "--out", str(out)]) == 0
    assert cli_main(["run", str(script), "--golden", str(out)]) == 0
    # corrupt the golden: exit code 1
    lines = out.read_text(encoding="utf-8").splitlines()
    lines.insert(1, lines[0])
    out.write_text("\n".join(lines) + "\n", encoding="utf-8")
    assert cli_main(["run", str(script), "--golden", str(out)]) == 1


def test_cli_script_error_exit_code(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text("{not json", encoding="utf-8")
    assert cli_main(["run", str(bad)]) == 2
    assert cli_main(["run", str(tmp_path / "missing.json")]) == 2
