"""Regenerate tests/golden/ from the bundled configs.

Before freezing, the jump-series price of ``merton_base`` is compared with the
Monte Carlo price of ``merton_mc`` (same model and contract); the script
refuses to write if they disagree by more than 3 standard errors.
"""
import json
import shutil
import sys
import tempfile
from pathlib import Path

from sparkspread.cli import main

ROOT = Path(__file__).resolve().parents[1]
GOLDEN = ROOT / "tests" / "golden"


def run_all(out: Path) -> None:
    for cfg in sorted((ROOT / "configs").glob("*.json")):
        cmd = "simulate" if "simulate" in cfg.stem else "price"
        args = [cmd, "--config", str(cfg), "--out", str(out)]
        if cmd == "price":
            args.append("--report")
        if main(args) != 0:
            sys.exit(f"{cfg.name} failed")


def main_() -> None:
    with tempfile.TemporaryDirectory() as tmp:
        out = Path(tmp)
        run_all(out)
        series = json.loads((out / "merton_base.price.json").read_text())
        mc = json.loads((out / "merton_mc.price.json").read_text())
        z = abs(series["price"] - mc["price"]) / mc["std_error"]
        print(f"series {series['price']:.6f} vs MC {mc['price']:.6f} +- {mc['std_error']:.4f} (|z| = {z:.2f})")
        if z > 3:
            sys.exit("cross-check failed; golden files not written")
        if GOLDEN.exists():
            shutil.rmtree(GOLDEN)
        shutil.copytree(out, GOLDEN)
    print(f"wrote {len(list(GOLDEN.iterdir()))} files to {GOLDEN}")


if __name__ == "__main__":
    main_()
