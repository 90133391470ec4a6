import hashlib
import json
import subprocess
import sys
from pathlib import Path

import numpy as np
import pytest

from keysolve.cli import main
from keysolve.geometry import RigidTransform, load_transform, rotation_xyz, save_transform
from keysolve.keypoints import read_keypoints, write_keypoints
from keysolve.volume import Volume3D, read_volume, write_volume

from conftest import non_coplanar, random_rotation


def sha(path):
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def report(path):
    return [json.loads(line) for line in Path(path).read_text().splitlines()]


def phantom(tmp, name, *extra, dims=32):
    out = tmp / name
    assert main(["phantom", "--dims", str(dims), "--seed", "5", "--out-dir", str(out), *extra]) == 0
    return out


@pytest.fixture(scope="module")
def base(tmp_path_factory):
    return phantom(tmp_path_factory.mktemp("ph"), "base")


def test_phantom_outputs(base):
    for name in ("image.raw", "image.json", "labels.raw", "labels.json", "landmarks.csv", "acts.raw", "report.jsonl"):
        assert (base / name).exists(), name
    rec = report(base / "report.jsonl")[0]
    assert rec["schema_version"] == 1
    assert rec["labels_present"] == [0, 1, 2, 3, 4]
    assert "render" in rec["timings_ms"]
    assert not any(p.name.startswith(".staging") for p in base.iterdir())


def test_register_self(base, tmp_path):
    out = tmp_path / "reg"
    code = main([
        "register", "--moving", str(base / "image.raw"), "--fixed", str(base / "image.raw"),
        "--acts-moving", str(base / "acts.raw"), "--acts-fixed", str(base / "acts.raw"),
        "--moving-labels", str(base / "labels.raw"), "--fixed-labels", str(base / "labels.raw"),
        "--family", "rigid", "--out-dir", str(out),
    ])
    assert code == 0
    rec = report(out / "report.jsonl")[0]
    assert all(v == 1.0 for v in rec["dice"].values())
    assert rec["dice_mean"] == 1.0
    assert set(rec["inputs"]) >= {str(base / "image.raw"), str(base / "acts.raw"), str(base / "labels.raw")}
    assert all(d.startswith("sha256:") for d in rec["inputs"].values())
    for stage in ("keypoints", "solve", "warp", "metrics"):
        assert stage in rec["timings_ms"]
    kpm, _ = read_keypoints(out / "kp_moving.csv")
    T = load_transform(out / "transform.json")
    np.testing.assert_allclose(T(kpm), kpm, atol=1e-9)


def test_register_tps_large_lambda_matches_affine(base, tmp_path):
    mov = phantom(tmp_path, "mov", "--rotate-deg", "20")
    args = [
        "register", "--moving", str(mov / "image.raw"), "--fixed", str(base / "image.raw"),
        "--kp-moving", str(mov / "landmarks.csv"), "--kp-fixed", str(base / "landmarks.csv"),
    ]
    assert main(args + ["--family", "affine", "--out-dir", str(tmp_path / "a")]) == 0
    assert main(args + ["--family", "tps", "--lambda", "1e8", "--out-dir", str(tmp_path / "t")]) == 0
    A = load_transform(tmp_path / "a" / "transform.json")
    T = load_transform(tmp_path / "t" / "transform.json")
    X = np.random.default_rng(0).uniform(-1, 1, (100, 3))
    assert np.abs(A(X) - T(X)).max() < 1e-3


def test_register_135_rigid(base, tmp_path):
    mov = phantom(tmp_path, "mov", "--rotate-deg", "135", dims=48)
    fix = phantom(tmp_path, "fix", dims=48)
    out = tmp_path / "reg"
    code = main([
        "register", "--moving", str(mov / "image.raw"), "--fixed", str(fix / "image.raw"),
        "--acts-moving", str(mov / "acts.raw"), "--acts-fixed", str(fix / "acts.raw"),
        "--moving-labels", str(mov / "labels.raw"), "--fixed-labels", str(fix / "labels.raw"),
        "--family", "rigid", "--out-dir", str(out),
    ])
    assert code == 0
    assert report(out / "report.jsonl")[0]["dice_mean"] >= 0.95


def test_register_weighted(base, tmp_path):
    out = tmp_path / "w"
    code = main([
        "register", "--moving", str(base / "image.raw"), "--fixed", str(base / "image.raw"),
        "--acts-moving", str(base / "acts.raw"), "--acts-fixed", str(base / "acts.raw"),
        "--weighted", "--weight-temperature", "1e6", "--family", "affine", "--out-dir", str(out),
    ])
    assert code == 0
    _, w = read_keypoints(out / "kp_fixed.csv")
    assert w is not None and w.sum() == pytest.approx(1.0)
    assert report(out / "report.jsonl")[0]["weighted"] is True


def test_exit_codes(base, tmp_path):
    vol = str(base / "image.raw")
    # usage
    assert main([]) == 2
    assert main(["register", "--moving", vol]) == 2
    assert main(["register", "--moving", vol, "--fixed", vol, "--out-dir", str(tmp_path / "x")]) == 2
    assert main(["register", "--moving", vol, "--fixed", vol, "--family", "bspline",
                 "--kp-moving", "a", "--kp-fixed", "b", "--out-dir", str(tmp_path)]) == 2
    assert main(["register", "--moving", vol, "--fixed", vol, "--lambda", "-1",
                 "--kp-moving", "a", "--kp-fixed", "b", "--out-dir", str(tmp_path)]) == 2
    # I/O
    assert main(["register", "--moving", str(tmp_path / "missing.raw"), "--fixed", vol,
                 "--kp-moving", "a", "--kp-fixed", "b", "--out-dir", str(tmp_path / "y")]) == 4
    assert main(["metrics", "--pred", str(tmp_path / "nope.raw"), "--ref", vol]) == 4
    # solver: collinear keypoints
    line = np.outer(np.linspace(-0.5, 0.5, 6), [1.0, 0.3, 0.1])
    write_keypoints(tmp_path / "line.csv", line)
    assert main(["register", "--moving", vol, "--fixed", vol, "--kp-moving", str(tmp_path / "line.csv"),
                 "--kp-fixed", str(tmp_path / "line.csv"), "--family", "rigid",
                 "--out-dir", str(tmp_path / "z")]) == 3
    assert not (tmp_path / "z" / "transform.json").exists()
    assert main(["groupwise", "--no-volumes", "--subjects", str(tmp_path / "line.csv"),
                 str(tmp_path / "line.csv"), "--out-dir", str(tmp_path / "g")]) == 3


def test_warp_identity_hash(base, tmp_path):
    ident = tmp_path / "id.json"
    save_transform(ident, RigidTransform(np.eye(3), np.zeros(3)))
    out = tmp_path / "warped" / "labels.raw"
    assert main(["warp", "--transform", str(ident), "--in", str(base / "labels.raw"), "--out", str(out)]) == 0
    assert sha(out) == sha(base / "labels.raw")
    assert sha(out.with_suffix(".json")) == sha(base / "labels.json")


def test_metrics_identical(base, tmp_path, capsys):
    lab = str(base / "labels.raw")
    assert main(["metrics", "--pred", lab, "--ref", lab, "--out", str(tmp_path / "m.jsonl")]) == 0
    rec = json.loads(capsys.readouterr().out.strip().splitlines()[-1])
    assert all(v == 1.0 for v in rec["dice"].values())
    assert all(v == 0.0 for v in rec["hausdorff_mm"].values())
    assert report(tmp_path / "m.jsonl")[0] == rec
    assert main(["metrics", "--pred", lab, "--ref", lab, "--hd95"]) == 0
    assert "hd95_mm" in json.loads(capsys.readouterr().out)


def test_sweep_lambda(tmp_path):
    rng = np.random.default_rng(3)
    P = non_coplanar(rng, 16)
    Q = P + 0.1 * np.sin(3 * P[:, [1, 2, 0]])
    write_keypoints(tmp_path / "f.csv", P)
    write_keypoints(tmp_path / "m.csv", Q)
    out = tmp_path / "sweep"
    lams = ["0", "1", "10", "100", "1e8"]
    assert main(["sweep-lambda", "--kp-moving", str(tmp_path / "m.csv"), "--kp-fixed", str(tmp_path / "f.csv"),
                 "--lambdas", *lams, "--out-dir", str(out)]) == 0
    rows = report(out / "report.jsonl")
    assert [r["lambda"] for r in rows] == [float(x) for x in lams]
    E = [r["bending_energy"] for r in rows]
    res = [r["control_point_residual_rms"] for r in rows]
    assert all(b <= a + 1e-12 for a, b in zip(E, E[1:]))
    assert all(b >= a - 1e-12 for a, b in zip(res, res[1:]))
    assert res[0] < 1e-6
    assert all((out / r["transform_file"]).exists() for r in rows)


def _write_perturbed_subjects(tmp_path, n, base_kp, base_img, rng, with_volumes=True):
    subjects = []
    for i in range(n):
        S = RigidTransform(random_rotation(rng, 30.0), rng.uniform(-0.05, 0.05, 3))
        kp = S.inverse()(base_kp)
        write_keypoints(tmp_path / f"kp{i}.csv", kp)
        if with_volumes:
            from keysolve.volume import warp

            write_volume(tmp_path / f"img{i}.raw", warp(base_img, S))
            subjects.append(f"{tmp_path / f'img{i}.raw'},{tmp_path / f'kp{i}.csv'}")
        else:
            subjects.append(str(tmp_path / f"kp{i}.csv"))
    return subjects


def test_groupwise_identical_subjects(base, tmp_path):
    subj = f"{base / 'image.raw'},{base / 'landmarks.csv'},{base / 'labels.raw'}"
    out = tmp_path / "g"
    assert main(["groupwise", "--subjects", subj, subj, subj, subj, "--out-dir", str(out)]) == 0
    rec = report(out / "report.jsonl")[0]
    assert rec["converged"] and rec["iterations_run"] == 1
    template = read_volume(out / "template.raw").data
    assert np.abs(template - read_volume(base / "image.raw").data).max() < 1e-5
    assert rec["pairwise_dice_mean"] == 1.0
    assert (out / "subject_003_warped_labels.raw").exists()


def test_groupwise_perturbed_phantoms(base, tmp_path):
    rng = np.random.default_rng(9)
    kp, _ = read_keypoints(base / "landmarks.csv")
    subjects = _write_perturbed_subjects(tmp_path, 8, kp, read_volume(base / "image.raw"), rng)
    out = tmp_path / "g"
    assert main(["groupwise", "--subjects", *subjects, "--out-dir", str(out)]) == 0
    rec = report(out / "report.jsonl")[0]
    assert rec["converged"]
    assert rec["post_alignment_spread"] < 1e-5
    assert rec["template_max"] > rec["unaligned_mean_max"]
    assert len(rec["displacement_trace"]) == rec["iterations_run"]
    atlas, _ = read_keypoints(out / "atlas.csv")
    for i in range(8):
        aligned, _ = read_keypoints(out / f"subject_{i:03d}_aligned.csv")
        assert np.abs(aligned - atlas).max() < 1e-5


def test_groupwise_keypoints_only(tmp_path):
    rng = np.random.default_rng(4)
    kp = non_coplanar(rng, 16)
    subjects = _write_perturbed_subjects(tmp_path, 128, kp, None, rng, with_volumes=False)
    out = tmp_path / "g"
    assert main(["groupwise", "--no-volumes", "--subjects", *subjects, "--out-dir", str(out)]) == 0
    rec = report(out / "report.jsonl")[0]
    assert rec["n_subjects"] == 128 and rec["converged"]
    assert len(list(out.glob("subject_*_transform.json"))) == 128
    assert not (out / "template.raw").exists()


def _strip_timings(path):
    recs = report(path)
    for r in recs:
        r.pop("timings_ms", None)
    return recs


def test_determinism(base, tmp_path):
    rng = np.random.default_rng(2)
    kp, _ = read_keypoints(base / "landmarks.csv")
    subjects = _write_perturbed_subjects(tmp_path, 3, kp, read_volume(base / "image.raw"), rng)
    out = tmp_path / "out"
    vol = str(base / "image.raw")
    commands = [
        ["phantom", "--dims", "24", "--seed", "11", "--rotate-deg", "30", "--out-dir", str(out / "ph")],
        ["register", "--moving", vol, "--fixed", vol, "--acts-moving", str(base / "acts.raw"),
         "--acts-fixed", str(base / "acts.raw"), "--family", "tps", "--lambda", "0.5", "--out-dir", str(out / "reg")],
        ["groupwise", "--subjects", *subjects, "--family", "affine", "--out-dir", str(out / "grp")],
        ["sweep-lambda", "--kp-moving", str(tmp_path / "kp0.csv"), "--kp-fixed", str(tmp_path / "kp1.csv"),
         "--lambdas", "0", "1", "--out-dir", str(out / "sw")],
        ["warp", "--transform", str(out / "reg" / "transform.json"), "--in", vol, "--out", str(out / "w" / "v.raw")],
    ]
    snapshots = []
    for _ in range(2):
        for cmd in commands:
            assert main(cmd) == 0, cmd
        snap = {}
        for f in sorted(out.rglob("*")):
            if f.is_file():
                snap[str(f)] = _strip_timings(f) if f.name == "report.jsonl" else sha(f)
        snapshots.append(snap)
    assert snapshots[0] == snapshots[1]


def test_threads_env(base, tmp_path, monkeypatch):
    monkeypatch.setenv("KEYSOLVE_THREADS", "bogus")
    lab = str(base / "labels.raw")
    assert main(["metrics", "--pred", lab, "--ref", lab]) == 2
    monkeypatch.setenv("KEYSOLVE_THREADS", "2")
    assert main(["metrics", "--pred", lab, "--ref", lab]) == 0


def test_console_entry_point(tmp_path):
    proc = subprocess.run([sys.executable, "-m", "keysolve.cli", "--version"], capture_output=True, text=True)
    assert proc.returncode == 0 and "keysolve" in proc.stdout
