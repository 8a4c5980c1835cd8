"""Regenerate fixtures/tampered_doc: a signed 3-block document whose second block was edited.

Only the public half of the keystore (root.pub, directory.bin) is kept.
"""

import shutil
import tempfile
from pathlib import Path

from ubic.cli import main

HERE = Path(__file__).parent / "tampered_doc"


def build():
    with tempfile.TemporaryDirectory() as tmp:
        home = Path(tmp) / "home"
        text = Path(tmp) / "statement.txt"
        text.write_text("Account holder: Alice\n\nBalance: EUR 1,234.56\n\nDate: 2024-06-01\n")
        common = ["--home", str(home), "--passphrase", "fixture", "--seed", "1"]
        assert main(common + ["keygen", "--role", "signer", "--id", "bank"]) == 0
        shutil.rmtree(HERE, ignore_errors=True)
        HERE.mkdir(parents=True)
        assert main(common + ["doc", "sign", "--signer", "bank", "--in", str(text),
                              "--out", str(HERE / "doc")]) == 0
        (HERE / "doc" / "block-2.txt").write_text("Balance: EUR 9,234.56", encoding="utf-8")
        (HERE / "home").mkdir()
        for name in ("root.pub", "directory.bin"):
            shutil.copy(home / name, HERE / "home" / name)


if __name__ == "__main__":
    build()
