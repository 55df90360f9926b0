"""Rendering tests built on hand-written fixture CSVs.

The fixtures replicate the optimizer CLI's documented file layout: one
``# config_hash=... master_seed=...`` comment line, a header row, data rows.
"""

import warnings

import numpy as np
import pytest
from matplotlib.collections import PolyCollection

from zofd_plots import (
    EmptyInputError,
    MonotonicityWarning,
    PlotSpec,
    SchemaError,
    build_figure,
    kind_letter,
    render,
)

COMMENT = "# config_hash=0123456789ab master_seed=7\n"

PNG_MAGIC = b"\x89PNG\r\n\x1a\n"


def _write(path, header, rows):
    lines = [COMMENT, header + "\n"] + [",".join(str(v) for v in r) + "\n" for r in rows]
    path.write_text("".join(lines))
    return path


def timing_csv(tmp_path, name="timing.csv"):
    rows = [
        ("qr_haar", 64, 64, 1.2e-3, 1e-4, 500),
        ("butterfly", 64, 64, 2.0e-4, 2e-5, 500),
        ("householder", 64, 64, 9.0e-5, 1e-5, 500),
    ]
    return _write(tmp_path / name, "kind,d,ell,mean_s,std_s,repeats", rows)


def grad_csv(tmp_path, name="grad.csv"):
    rows = [
        ("sphere", kind, 8, trial, err * (trial + 1))
        for kind, err in (("qr_haar", 1e-8), ("gaussian", 1e-2))
        for trial in range(10)
    ]
    return _write(tmp_path / name, "problem,kind,ell,trial,rel_error", rows)


def conv_csv(tmp_path, name="conv.csv"):
    rows = []
    for kind, scale in (("qr_haar", 1.0), ("gaussian", 2.0)):
        for rep in range(3):
            f = 100.0 * (1.0 + 0.1 * rep)
            for evals in (10, 50, 100, 200, 400, 800):
                f *= 0.5 * scale if scale < 2.0 else 0.8
                rows.append(("sphere", kind, 4, rep, evals, f))
    return _write(tmp_path / name, "problem,kind,ell,repeat,evals,f_best", rows)


def profile_csv(tmp_path, name="profile.csv", monotone=True):
    taus = np.logspace(-4, 0, 9)
    rows = []
    for kind, shift in (("qr_haar", 0), ("gaussian", 3)):
        fracs = np.clip(np.linspace(-0.2 - 0.1 * shift, 1.0, taus.size), 0, 1)
        if not monotone and kind == "gaussian":
            fracs[5] = 0.05  # dents the curve after it already rose
        rows += [
            (kind, 4, f"{t:.6g}", f"{fr:.4f}") for t, fr in zip(taus, fracs)
        ]
    return _write(tmp_path / name, "kind,ell,tau,fraction_solved", rows)


def spec_for(path, chart, out, **kw):
    return PlotSpec(input_csv=path, chart=chart, out_image=out, **kw)


# ----------------------------------------------------------------- rendering


def test_timing_renders_png(tmp_path):
    out = tmp_path / "t.png"
    got = render(spec_for(timing_csv(tmp_path), "timing", out, title="gen time"))
    assert got == out
    assert out.read_bytes().startswith(PNG_MAGIC)


def test_grad_error_renders(tmp_path):
    out = tmp_path / "g.png"
    render(spec_for(grad_csv(tmp_path), "grad_error", out))
    assert out.stat().st_size > 0


def test_convergence_two_kinds_three_repeats_two_bands(tmp_path):
    spec = spec_for(conv_csv(tmp_path), "convergence", tmp_path / "c.png")
    fig = build_figure(spec)
    ax = fig.axes[0]
    bands = [c for c in ax.collections if isinstance(c, PolyCollection)]
    assert len(bands) == 2
    assert len(ax.lines) == 2
    render(spec)
    assert spec.out_image.exists()


def test_convergence_group_by_override(tmp_path):
    spec = spec_for(
        conv_csv(tmp_path), "convergence", tmp_path / "c2.png", group_by=("kind",)
    )
    fig = build_figure(spec)
    assert len(fig.axes[0].lines) == 2


def test_profile_monotone_renders_without_warning(tmp_path):
    spec = spec_for(profile_csv(tmp_path), "profile", tmp_path / "p.png")
    with warnings.catch_warnings():
        warnings.simplefilter("error", MonotonicityWarning)
        render(spec)
    assert spec.out_image.exists()


def test_profile_violation_warns_and_annotates(tmp_path):
    path = profile_csv(tmp_path, monotone=False)
    spec = spec_for(path, "profile", tmp_path / "pv.png")
    with pytest.warns(MonotonicityWarning, match="gaussian|G"):
        fig = build_figure(spec)
    assert any("non-monotone" in t.get_text() for t in fig.texts)
    with pytest.warns(MonotonicityWarning):
        render(spec)
    assert spec.out_image.exists()


def test_profile_without_grouping_columns(tmp_path):
    rows = [(f"{t:.4g}", f"{v:.2f}") for t, v in zip((0.01, 0.1, 1.0), (0.2, 0.5, 1.0))]
    path = _write(tmp_path / "bare.csv", "tau,fraction_solved", rows)
    render(spec_for(path, "profile", tmp_path / "bare.png"))
    assert (tmp_path / "bare.png").exists()


# ------------------------------------------------------------------- errors


def test_schema_mismatch_lists_missing_columns(tmp_path):
    path = _write(tmp_path / "bad.csv", "kind,d,ell,repeats", [("qr_haar", 4, 4, 5)])
    out = tmp_path / "bad.png"
    with pytest.raises(SchemaError, match="missing: mean_s, std_s"):
        render(spec_for(path, "timing", out))
    assert not out.exists()


def test_empty_csv_no_rows(tmp_path):
    path = _write(tmp_path / "empty.csv", "kind,d,ell,mean_s,std_s,repeats", [])
    out = tmp_path / "empty.png"
    with pytest.raises(EmptyInputError):
        render(spec_for(path, "timing", out))
    assert not out.exists()


def test_comment_only_csv(tmp_path):
    path = tmp_path / "hollow.csv"
    path.write_text(COMMENT)
    with pytest.raises(EmptyInputError):
        render(spec_for(path, "timing", tmp_path / "h.png"))


def test_missing_input_file(tmp_path):
    with pytest.raises(FileNotFoundError):
        render(spec_for(tmp_path / "nope.csv", "timing", tmp_path / "n.png"))


def test_unknown_chart_rejected(tmp_path):
    with pytest.raises(ValueError, match="unknown chart"):
        PlotSpec(input_csv=tmp_path / "x.csv", chart="pie", out_image=tmp_path / "x.png")


def test_bad_dpi_rejected(tmp_path):
    with pytest.raises(ValueError, match="dpi"):
        PlotSpec(
            input_csv=tmp_path / "x.csv", chart="timing",
            out_image=tmp_path / "x.png", dpi=1,
        )


# ---------------------------------------------------------------- contracts


def test_rendering_is_deterministic_png(tmp_path):
    path = conv_csv(tmp_path)
    a = render(spec_for(path, "convergence", tmp_path / "a.png"))
    b = render(spec_for(path, "convergence", tmp_path / "b.png"))
    assert a.read_bytes() == b.read_bytes()


def test_rendering_is_deterministic_svg(tmp_path):
    path = timing_csv(tmp_path)
    a = render(spec_for(path, "timing", tmp_path / "a.svg", svg=True))
    b = render(spec_for(path, "timing", tmp_path / "b.svg", svg=True))
    blob = a.read_bytes()
    assert blob.startswith(b"<?xml")
    assert blob == b.read_bytes()


def test_input_file_never_mutated(tmp_path):
    path = profile_csv(tmp_path)
    before = path.read_bytes()
    render(spec_for(path, "profile", tmp_path / "p.png"))
    assert path.read_bytes() == before


def test_kind_letters():
    assert kind_letter("qr_haar") == "Q"
    assert kind_letter("spherical") == "S"
    assert kind_letter("stiefel") == "St"
    assert kind_letter("mystery") == "mystery"
