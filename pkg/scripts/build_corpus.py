"""Regenerate the bundled synthetic corpus under src/bss/data/corpus."""
from pathlib import Path

from bss import synthetic

DEST = Path(__file__).resolve().parents[1] / "src" / "bss" / "data" / "corpus"

if __name__ == "__main__":
    for path in synthetic.write_corpus(DEST, synthetic.CORPUS + synthetic.LOAD_CORPUS):
        print(path)
