"""Exercise the HTTP service end to end with an in-process client: create a
case, walk its legal actions, show that illegal transitions are refused, and
fetch the final report.

Run:  python3 demos/05_service.py
"""
import json
import tempfile
from pathlib import Path

from fastapi.testclient import TestClient

from dermapipe.config import ServiceConfig
from dermapipe.service import create_app

FIXTURES = Path(__file__).resolve().parent.parent / "fixtures"


def main():
    with tempfile.TemporaryDirectory() as tmp:
        config = ServiceConfig(store_root=str(Path(tmp) / "cases"),
                               mock_fixtures=str(FIXTURES / "providers"))
        with TestClient(create_app(config)) as client:
            lesion = (FIXTURES / "images" / "lesion.png").read_bytes()
            case = client.post("/cases", content=lesion).json()
            case_id = case["id"]
            print(f"created case {case_id} in state {case['state']}")

            resp = client.post(f"/cases/{case_id}/xai")
            print(f"xai before analyze -> HTTP {resp.status_code} (refused)")

            print("analyze ->", client.post(f"/cases/{case_id}/analyze").json())
            print("xai     ->", client.post(f"/cases/{case_id}/xai").json())

            report = client.get(f"/cases/{case_id}/report").json()
            print(f"legal actions now: {report['legal_actions']}")
            print("send2lab:", json.dumps(report["artifacts"]["send2lab"], indent=2))
            print("technical report:")
            print(report["artifacts"]["technical_report"])


if __name__ == "__main__":
    main()
