import pytest

from crashcast.core import CSV_COLUMNS
from crashcast.pipeline import MissingHeader, UnreadableFile, generate_synthetic, ingest_csv, write_csv
from crashcast.pipeline.synthetic import SyntheticConfig

HEADER = ",".join(CSV_COLUMNS)


def test_empty_file_with_header(tmp_path):
    path = tmp_path / "empty.csv"
    path.write_text(HEADER + "\n")
    records, errors = ingest_csv(path)
    assert records == []
    assert errors == []


def test_missing_header(tmp_path):
    path = tmp_path / "headerless.csv"
    path.write_text("ID,DEC_LAT\n1,40.0\n")
    with pytest.raises(MissingHeader):
        ingest_csv(path)


def test_no_rows_at_all(tmp_path):
    path = tmp_path / "blank.csv"
    path.write_text("")
    with pytest.raises(MissingHeader):
        ingest_csv(path)


def test_unreadable_file(tmp_path):
    with pytest.raises(UnreadableFile):
        ingest_csv(tmp_path / "nope.csv")


def test_bad_severity_isolated(tmp_path):
    records = generate_synthetic(SyntheticConfig(n_records=3, seed=1))
    path = tmp_path / "rows.csv"
    write_csv(records, path)
    lines = path.read_text().splitlines()
    parts = lines[2].split(",")
    parts[CSV_COLUMNS.index("SEVERITY")] = "9"
    lines[2] = ",".join(parts)
    path.write_text("\n".join(lines) + "\n")

    parsed, errors = ingest_csv(path)
    assert len(parsed) == 2
    assert len(errors) == 1
    assert errors[0].line == 3  # header is line 1


def test_header_case_and_order_insensitive(tmp_path):
    records = generate_synthetic(SyntheticConfig(n_records=5, seed=2))
    path = tmp_path / "swap.csv"
    write_csv(records, path)
    lines = path.read_text().splitlines()
    header = lines[0].split(",")
    # swap two columns and lowercase the header
    i, j = 0, 5
    header[i], header[j] = header[j], header[i]
    rows = []
    for line in lines[1:]:
        parts = line.split(",")
        parts[i], parts[j] = parts[j], parts[i]
        rows.append(",".join(parts))
    path.write_text(",".join(h.lower() for h in header) + "\n" + "\n".join(rows) + "\n")
    parsed, errors = ingest_csv(path)
    assert errors == []
    assert parsed == records


def test_roundtrip_1000_rows(tmp_path):
    records = generate_synthetic(SyntheticConfig(n_records=1000, seed=3))
    path = tmp_path / "big.csv"
    write_csv(records, path)
    parsed, errors = ingest_csv(path)
    assert errors == []
    assert parsed == records


def test_partial_coordinates_rejected(tmp_path):
    records = generate_synthetic(SyntheticConfig(n_records=2, seed=4))
    path = tmp_path / "partial.csv"
    write_csv(records, path)
    lines = path.read_text().splitlines()
    parts = lines[1].split(",")
    parts[CSV_COLUMNS.index("DEC_LONG")] = ""
    lines[1] = ",".join(parts)
    path.write_text("\n".join(lines) + "\n")
    parsed, errors = ingest_csv(path)
    assert len(parsed) == 1
    assert len(errors) == 1
