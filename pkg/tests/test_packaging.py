import re
from pathlib import Path

ROOT = Path(__file__).resolve().parent.parent


def test_author_is_consistent():
    setup = re.search(r'author="([^"]+)"', (ROOT / 'setup.py').read_text()).group(1)
    docs = re.search(r"author = '([^']+)'", (ROOT / 'docs' / 'source' / 'conf.py').read_text()).group(1)
    assert setup == docs == 'bfstrip developers'
