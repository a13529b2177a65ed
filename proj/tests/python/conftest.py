import os
import sys

_ext = os.environ.get("SEMSIN_EXTENSION_DIR")
if _ext:
    sys.path.insert(0, _ext)
