"""Console and PyInstaller entry point: ``nullgeo <scenario> --config FILE``.

Frozen builds unpack into ``sys._MEIPASS``; bundle the report templates with
``--add-data input/templates:input/templates``.
"""
from __future__ import annotations

import sys
from pathlib import Path

ROOT = Path(getattr(sys, "_MEIPASS", Path(__file__).resolve().parent))
if str(ROOT) not in sys.path:
    sys.path.insert(0, str(ROOT))

from src.main import main  # noqa: E402

if __name__ == "__main__":
    main()
