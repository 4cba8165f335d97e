import sys
from pathlib import Path

# make the shared oracle helpers importable from test modules
sys.path.insert(0, str(Path(__file__).resolve().parent))
