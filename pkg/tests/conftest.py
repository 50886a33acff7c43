import sys
from pathlib import Path

# Make the sibling naive-oracle module importable regardless of how pytest
# resolves rootdir.
sys.path.insert(0, str(Path(__file__).parent))
