import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).parent))

from hypothesis import settings

# fixed example generation so repeated runs see the same cases
settings.register_profile("repro", derandomize=True, print_blob=True)
settings.load_profile("repro")
