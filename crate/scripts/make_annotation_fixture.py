"""Writes the synthetic two-speaker annotation fixture.

    python3 scripts/make_annotation_fixture.py
"""
import json
import random
from pathlib import Path

OUT = Path(__file__).resolve().parent.parent / "crates/core/tests/fixtures/two_speaker_annotations.json"


def segment(seg_id, spk, total, face_w, face_h, origin, lip_keep, face_keep, rng):
    frames = []
    for i in range(total):
        has_face = rng.random() < face_keep
        has_lip = rng.random() < lip_keep
        if not (has_face or has_lip):
            continue
        dx, dy = rng.randint(-3, 3), rng.randint(-2, 2)
        lx, ty = origin[0] + dx, origin[1] + dy
        face = [lx, ty, lx + face_w + rng.randint(-2, 2), ty + face_h + rng.randint(-2, 2)]
        mw, mh = face_w * 2 // 5, face_h // 6
        mx = lx + (face_w - mw) // 2
        my = ty + face_h * 2 // 3
        lip = [mx, my, mx + mw, my + mh]
        frames.append({"i": i, "face": face if has_face else None, "lip": lip if has_lip else None})
    return {
        "segment_id": seg_id,
        "speaker_id": spk,
        "total_frames": total,
        "fps": 25,
        "transcript": None,
        "frames": frames,
    }


def main():
    rng = random.Random(443217)
    doc = {
        "segments": [
            segment("S217_001", "S217", 50, 168, 184, (600, 300), 0.9, 0.95, rng),
            segment("S443_001", "S443", 40, 92, 104, (1300, 420), 0.85, 0.9, rng),
            segment("S443_002", "S443", 20, 90, 100, (1310, 410), 0.3, 0.9, rng),
        ]
    }
    OUT.parent.mkdir(parents=True, exist_ok=True)
    OUT.write_text(json.dumps(doc, indent=1) + "\n")


if __name__ == "__main__":
    main()
