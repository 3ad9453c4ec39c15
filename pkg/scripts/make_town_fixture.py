"""Regenerate src/supplytask/data/town from the synthetic generator."""
from pathlib import Path

from supplytask.synthetic import town_files

out = Path(__file__).resolve().parents[1] / "src" / "supplytask" / "data" / "town"
out.mkdir(parents=True, exist_ok=True)
for name, data in town_files().items():
    (out / name).write_bytes(data)
    print(f"wrote {out / name}")
