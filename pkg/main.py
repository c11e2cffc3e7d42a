#!/usr/bin/env python3
"""
toric-spectral - Main Entry Point
Spectral invariants and profile reconstruction for U(n)-invariant toric metrics on CP^n
"""

import sys
from pathlib import Path

from dotenv import load_dotenv

# Add project root to Python path
project_root = Path(__file__).parent
sys.path.insert(0, str(project_root))

# Load environment variables from .env
load_dotenv(dotenv_path=project_root / '.env')

from interfaces.cli import main

if __name__ == "__main__":
    sys.exit(main())
