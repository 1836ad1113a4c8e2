"""Regenerate the bundled 40-building synthetic town in src/gridsynth/data/."""
from pathlib import Path

from gridsynth.fixtures import synth_town

if __name__ == "__main__":
    out = Path(__file__).resolve().parents[1] / "src" / "gridsynth" / "data"
    for key, path in synth_town(40, seed=7).write(out, "synthetic_town").items():
        print(key, path)
