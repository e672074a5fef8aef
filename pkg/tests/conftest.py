import json
from pathlib import Path

import pytest

from searchkin import (
    Document,
    SearchLogRecord,
    aggregate_user_profiles,
    build_model,
    index_documents,
    kernels,
)

# The canonical five-user fixture used across the suite: one classification
# per user and their distinct search queries.
TABLE1_LOGS = [
    ("user1", "Java Developer", ["Java", "Java Developer", "C", "Software Engineer"]),
    ("user2", "Nurse", ["RN", "Registered Nurse", "Health Care"]),
    ("user3", ".NET Developer", ["C#", "ASP", "VB", "Software Engineer", "SE"]),
    ("user4", "Java Developer", ["Java", "JEE", "Struts", "Software Engineer", "SE"]),
    ("user5", "Health Care", ["Health Care Rep", "HealthCare"]),
]

# Small job corpus matching the fixture's classes; "plumber" lives only here,
# never in the logs, so it exercises the cold path.
JOBS_CORPUS = [
    ("job-nurse-1", "Nurse", "registered nurse rn for hospital health care unit"),
    ("job-nurse-2", "Nurse", "rn nurse needed at community clinic health care"),
    ("job-java-1", "Java Developer", "java developer jee struts team"),
    ("job-java-2", "Java Developer", "software engineer java backend"),
    ("job-dotnet-1", ".NET Developer", "c# asp vb software engineer"),
    ("job-hc-1", "Health Care", "health care rep healthcare outreach"),
    ("job-plumber-1", None, "plumber with pipefitting experience"),
]


@pytest.fixture(scope="session", autouse=True)
def warm_kernels():
    # JIT compilation happens once here so timed tests measure the work only.
    kernels.warmup()


@pytest.fixture(scope="session")
def table1_records():
    return [
        SearchLogRecord(user_id=u, classification=c, query=q)
        for u, c, queries in TABLE1_LOGS
        for q in queries
    ]


@pytest.fixture(scope="session")
def table1_profiles(table1_records):
    profiles, _ = aggregate_user_profiles(table1_records)
    return profiles


@pytest.fixture(scope="session")
def table1_model(table1_profiles):
    return build_model(table1_profiles)


@pytest.fixture(scope="session")
def jobs_index():
    docs = [Document(doc_id=d, class_label=c, body=b) for d, c, b in JOBS_CORPUS]
    return index_documents(docs)


def write_table1_inputs(tmp_path: Path) -> tuple[Path, Path]:
    """Write the fixture logs and corpus as JSONL files; returns their paths."""
    logs = tmp_path / "logs.jsonl"
    with open(logs, "w", encoding="utf-8") as fh:
        for user_id, classification, queries in TABLE1_LOGS:
            for query in queries:
                fh.write(
                    json.dumps(
                        {"user_id": user_id, "classification": classification, "query": query}
                    )
                    + "\n"
                )
    corpus = tmp_path / "corpus.jsonl"
    with open(corpus, "w", encoding="utf-8") as fh:
        for doc_id, class_label, body in JOBS_CORPUS:
            fh.write(
                json.dumps({"doc_id": doc_id, "class_label": class_label, "body": body}) + "\n"
            )
    return logs, corpus


@pytest.fixture()
def table1_inputs(tmp_path):
    return write_table1_inputs(tmp_path)
