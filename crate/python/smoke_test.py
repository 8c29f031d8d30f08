#!/usr/bin/env python3
"""Smoke test for the roombox_py extension module.

Builds nothing itself: it locates the compiled cdylib under target/,
copies it into a temp directory under the importable name, and exercises
the main types and operations end to end.

    cargo build -p roombox-py --release
    python3 python/smoke_test.py
"""

import json
import math
import shutil
import sys
import tempfile
from pathlib import Path

REPO = Path(__file__).resolve().parent.parent


def import_roombox():
    candidates = [
        REPO / "target" / "release" / "libroombox_py.so",
        REPO / "target" / "debug" / "libroombox_py.so",
    ]
    built = [p for p in candidates if p.exists()]
    if not built:
        sys.exit(
            "libroombox_py.so not found; run `cargo build -p roombox-py` first"
        )
    newest = max(built, key=lambda p: p.stat().st_mtime)
    stage = Path(tempfile.mkdtemp(prefix="roombox_py_"))
    shutil.copy2(newest, stage / "roombox_py.so")
    sys.path.insert(0, str(stage))
    import roombox_py

    return roombox_py


def approx(a, b, tol=1e-9):
    assert abs(a - b) <= tol, f"{a} != {b} (tol {tol})"


CUBE_OBJ = """\
v 0 0 0
v 1 0 0
v 1 1 0
v 0 1 0
v 0 0 1
v 1 0 1
v 1 1 1
v 0 1 1
f 1 4 3 2
f 5 6 7 8
f 1 2 6 5
f 4 8 7 3
f 1 5 8 4
f 2 3 7 6
"""

TWO_CUBE_SCENE = {
    "room_type": "bench",
    "floor": {"vertices": [[-6.0, -6.0], [6.0, -6.0], [6.0, 6.0], [-6.0, 6.0]]},
    "objects": [
        {
            "id": "obj_0",
            "class": "table",
            "model_id": None,
            "translation": [0.0, 0.5, 0.0],
            "size": [1.0, 1.0, 1.0],
            "theta": 0.0,
            "cuboids": [{"center": [0.5, 0.5, 0.5], "size": [1.0, 1.0, 1.0]}],
        },
        {
            "id": "obj_1",
            "class": "chair",
            "model_id": None,
            "translation": [0.5, 0.5, 0.1],
            "size": [1.0, 1.0, 1.0],
            "theta": 0.0,
            "cuboids": [{"center": [0.5, 0.5, 0.5], "size": [1.0, 1.0, 1.0]}],
        },
    ],
}


def main():
    rb = import_roombox()
    tmp = Path(tempfile.mkdtemp(prefix="roombox_smoke_"))

    # mesh -> voxels -> cuboids
    obj_path = tmp / "cube.obj"
    obj_path.write_text(CUBE_OBJ)
    grid = rb.voxelize_mesh(str(obj_path), n=16)
    assert grid.resolution == 16
    assert grid.occupancy_count() == 16**3, grid.occupancy_count()
    cuboids = rb.abstract_mesh(str(obj_path), n=16)
    assert len(cuboids) == 1, cuboids
    approx(cuboids[0].volume(), 1.0, 1e-12)

    # voxel round trip and IoU
    cvox = tmp / "cube.cvox"
    grid.save(str(cvox))
    back = rb.VoxelGrid.load(str(cvox))
    assert rb.voxel_iou(grid, back) == 1.0
    half = rb.rasterize([rb.Cuboid((0.25, 0.5, 0.5), (0.5, 1.0, 1.0))], 16)
    approx(rb.voxel_iou(grid, half), 0.5, 1e-12)

    # oriented-box intersection: the 45-degree octagon case
    a = rb.OrientedCuboid((0, 0, 0), (1, 1, 1), 0.0)
    b = rb.OrientedCuboid((0, 0, 0), (1, 1, 1), math.pi / 4)
    approx(rb.intersection_volume(a, b), 2 * (math.sqrt(2) - 1), 1e-9)

    # scene metrics and curation
    scene = rb.Scene.from_json(json.dumps(TWO_CUBE_SCENE))
    assert scene.n_objects == 2
    approx(scene.ciou(), 1000.0 * 0.45 / 2.0, 1e-9)
    matrix = rb.scene_iou_matrix(scene)
    assert matrix[0][1] > 0.2

    curated, report = rb.avoid_scene_intersections(scene)
    assert report["converged"], report
    assert report["final_overlap"] <= 1e-6
    approx(curated.ciou(), 0.0, 1e-12)
    # y never moves
    for before, after in zip(scene.object_translations(), curated.object_translations()):
        assert before[1] == after[1]

    assert rb.nirate([curated], 0.01) == 100.0
    assert rb.ckl({"chair": 3, "table": 1}, {"chair": 3, "table": 1}) == 0.0

    # sampling round trip through the fitted baseline
    model = rb.SamplerModel.fit([curated] * 4)
    sampled = model.sample(curated, seed=7)
    assert sampled.n_objects == 2
    again = model.sample(curated, seed=7)
    assert sampled.to_json() == again.to_json()

    # token sequence: floor + (entity + 1 cuboid) per object
    tokens = rb.token_sequence(curated)
    assert len(tokens) == 1 + 2 * 2
    assert tokens[0]["kind"] == "floor"
    assert tokens[1]["kind"] == "entity"
    assert tokens[2]["kind"] == "cuboid"

    # rendering
    svg = rb.render_svg(curated)
    assert svg.startswith("<svg") and "polygon" in svg

    # scene file round trip is byte-stable
    scene_path = tmp / "scene.json"
    curated.save(str(scene_path))
    reloaded = rb.Scene.load(str(scene_path))
    assert reloaded.to_json() == curated.to_json()

    print("smoke test passed:", rb.__name__)


if __name__ == "__main__":
    main()
