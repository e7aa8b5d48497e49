# app.py
import os
import sys

# api/ 디렉토리를 PYTHONPATH에 추가 (Correspondence_Analysis, scoring_models, utils)
current_dir = os.path.dirname(os.path.abspath(__file__))
api_root = os.path.join(current_dir, "api")

if api_root not in sys.path:
    sys.path.insert(0, api_root)

from Correspondence_Analysis.cli import main

if __name__ == '__main__':
    sys.exit(main())
