"""Where the demo scripts put their pictures."""

from pathlib import Path

OUT = Path(__file__).resolve().parent / "out"


def save_svg(name, text):
    OUT.mkdir(exist_ok=True)
    path = OUT / name
    path.write_text(text)
    print(f"wrote {path}")
