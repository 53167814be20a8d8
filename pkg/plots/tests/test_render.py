import json
import os

import pytest
from PIL import Image

from paultrap_plots.cli import main
from paultrap_plots.render import (FIGURES, SchemaError, fig1_threshold,
                                   fig5_split, fig_stability_map,
                                   manifest_hash, render)

FIGURE_INPUT = {
    "fig1_threshold": "threshold",
    "fig2_freq_scaling": "freq_sweep",
    "fig3_qx_scaling": "freq_sweep",
    "fig4_parametric": "parametric",
    "fig5_split": "split",
    "fig6_stretch": "stretch",
    "fig_stability_map": "map",
    "figA_trajectories": "crystal",
    "figB_bfield": "bfield",
}


@pytest.mark.parametrize("figure_id", sorted(FIGURES))
def test_every_figure_renders(figure_id, primary_outputs, tmp_path):
    in_dir = primary_outputs[FIGURE_INPUT[figure_id]]
    out = tmp_path / f"{figure_id}.png"
    code = main([figure_id, "--in", in_dir, "--out", str(out)])
    assert code == 0
    assert out.exists() and out.stat().st_size > 5_000


@pytest.mark.parametrize("figure_id", ["fig1_threshold", "fig5_split",
                                       "fig_stability_map"])
def test_metadata_embeds_manifest_hash(figure_id, primary_outputs, tmp_path):
    in_dir = primary_outputs[FIGURE_INPUT[figure_id]]
    out = tmp_path / "fig.png"
    render(figure_id, in_dir, str(out))
    expected = manifest_hash(in_dir)
    assert expected != "unknown"
    with Image.open(out) as img:
        assert img.info.get("paultrap-manifest") == expected


def test_pdf_metadata(primary_outputs, tmp_path):
    out = tmp_path / "fig.pdf"
    digest = render("fig1_threshold", primary_outputs["threshold"], str(out))
    blob = out.read_bytes()
    assert f"paultrap-manifest:{digest}".encode() in blob


def test_fig1_overlays_present(primary_outputs):
    fig = fig1_threshold(primary_outputs["threshold"])
    ax = fig.axes[0]
    labels = [line.get_label() for line in ax.get_lines()]
    assert any("fit" in lab for lab in labels)
    assert any("mean rate" in lab for lab in labels)
    assert any("threshold" in lab for lab in labels)


def test_fig5_overlays_present(primary_outputs):
    fig = fig5_split(primary_outputs["split"])
    assert len(fig.axes) == 3
    # critical-point marker appears on every panel
    for ax in fig.axes:
        assert any(line.get_linestyle() == "--" for line in ax.get_lines())
    assert "dn_stretch" in fig.axes[0].get_title()


def test_stability_map_overlay_present(primary_outputs):
    fig = fig_stability_map(primary_outputs["map"])
    ax = fig.axes[0]
    assert ax.collections, "expected heat map and contour collections"
    assert len(ax.collections) >= 2


def test_rendering_is_idempotent(primary_outputs, tmp_path):
    in_dir = primary_outputs["split"]
    out1 = tmp_path / "a.png"
    out2 = tmp_path / "b.png"
    render("fig5_split", in_dir, str(out1))
    render("fig5_split", in_dir, str(out2))
    assert out1.read_bytes() == out2.read_bytes()


def test_rendering_leaves_inputs_untouched(primary_outputs, tmp_path):
    in_dir = primary_outputs["threshold"]
    before = {name: (os.path.getsize(os.path.join(in_dir, name)))
              for name in os.listdir(in_dir)}
    render("fig1_threshold", in_dir, str(tmp_path / "x.png"))
    after = {name: (os.path.getsize(os.path.join(in_dir, name)))
             for name in os.listdir(in_dir)}
    assert before == after


def test_schema_mismatch_names_column(tmp_path):
    bad = tmp_path / "bad"
    bad.mkdir()
    (bad / "cooling_curve.csv").write_text("t_s,energy_z_j\n0,1\n")
    with pytest.raises(SchemaError, match="energy_x_j"):
        render("fig4_parametric", str(bad), str(tmp_path / "x.png"))


def test_empty_but_valid_csv_renders(tmp_path):
    empty = tmp_path / "empty"
    empty.mkdir()
    (empty / "trajectory.csv").write_text(
        "t_s,x1_m,y1_m,z1_m,vx1_mps,vy1_mps,vz1_mps\n")
    out = tmp_path / "fig.png"
    code = main(["figA_trajectories", "--in", str(empty), "--out", str(out)])
    assert code == 0
    assert out.exists()


def test_unknown_figure_id(tmp_path):
    with pytest.raises(SchemaError):
        render("fig99", str(tmp_path), str(tmp_path / "x.png"))


def test_missing_input_exit_code(tmp_path):
    code = main(["fig1_threshold", "--in", str(tmp_path),
                 "--out", str(tmp_path / "x.png")])
    assert code == 2
