import pytest
from hypothesis import given
from hypothesis import strategies as st

from oracles import tercile_sizes
from taskshare.taxonomy import (
    SOC_MAJOR_GROUPS,
    DuplicateConflict,
    EmptyFile,
    InvalidWage,
    MalformedSoc,
    MissingColumn,
    SocCode,
    UnknownMajorGroup,
    WageTercile,
    assign_terciles,
    load_taxonomy,
    load_wage_base,
    parse_soc,
)

L, M, H = WageTercile.LOW, WageTercile.MID, WageTercile.HIGH


def write(path, text):
    path.write_text(text, encoding="utf-8")
    return path


@pytest.mark.parametrize("text, major, detail, family", [
    ("15-1132", 15, 1132, "Computer and Mathematical"),
    ("11-9199", 11, 9199, "Management"),
    (" 29-1141 ", 29, 1141, "Healthcare Practitioners and Technical"),
])
def test_parse_soc(text, major, detail, family):
    soc = parse_soc(text)
    assert soc == SocCode(major, detail)
    assert soc.family == family


@pytest.mark.parametrize("text", ["1-234", "151132", "15-11a2", "15_1132", "", "15-11322"])
def test_parse_soc_malformed(text):
    with pytest.raises(MalformedSoc):
        parse_soc(text)


def test_parse_soc_unknown_major():
    with pytest.raises(UnknownMajorGroup):
        parse_soc("55-1011")


def test_22_occupation_families():
    assert len(SOC_MAJOR_GROUPS) == 22


@given(st.sampled_from(sorted(SOC_MAJOR_GROUPS)), st.integers(0, 9999))
def test_soc_roundtrip(major, detail):
    soc = SocCode(major, detail)
    assert parse_soc(str(soc)) == soc
    assert str(parse_soc(str(soc))) == str(soc)


@pytest.fixture
def soc_file(tmp_path):
    return write(tmp_path / "soc.csv", "soc,family_name\n15-1132,Computer and Mathematical\n11-9199,\n")


def test_load_taxonomy_python_example(tmp_path, soc_file):
    tasks = write(tmp_path / "t.csv", "task,cluster,family\nPython,Scripting Languages,Information Technology\n")
    index = load_taxonomy(tasks, soc_file)
    assert len(index) == 1
    desc = index.resolve_task("  PYTHON ")
    assert desc.family == "Information Technology"
    assert desc.cluster == "Scripting Languages"
    assert desc.name == "Python"
    # blank family_name falls back to the major-group name
    assert index.occupation_family(parse_soc("11-9199")) == "Management"


def test_load_taxonomy_conflict(tmp_path, soc_file):
    tasks = write(tmp_path / "t.csv", "task,cluster,family\nPython,Scripting Languages,IT\npython,Java,IT\n")
    with pytest.raises(DuplicateConflict):
        load_taxonomy(tasks, soc_file)


def test_load_taxonomy_repeated_consistent_row(tmp_path, soc_file):
    tasks = write(tmp_path / "t.csv", "task,cluster,family\nPython,Scripting Languages,IT\nPython,Scripting Languages,IT\n")
    assert len(load_taxonomy(tasks, soc_file)) == 1


def test_cluster_in_two_families(tmp_path, soc_file):
    tasks = write(tmp_path / "t.csv", "task,cluster,family\nPython,Scripting,IT\nBash,Scripting,Admin\n")
    with pytest.raises(DuplicateConflict):
        load_taxonomy(tasks, soc_file)


def test_load_taxonomy_missing_column(tmp_path, soc_file):
    tasks = write(tmp_path / "t.csv", "task,family\nPython,IT\n")
    with pytest.raises(MissingColumn):
        load_taxonomy(tasks, soc_file)


@pytest.mark.parametrize("content", ["", "task,cluster,family\n"])
def test_load_taxonomy_empty(tmp_path, soc_file, content):
    with pytest.raises(EmptyFile):
        load_taxonomy(write(tmp_path / "t.csv", content), soc_file)


def test_expected_family_count(tmp_path, soc_file):
    tasks = write(tmp_path / "t.csv", "task,cluster,family\nA,c1,F1\nB,c2,F2\n")
    assert load_taxonomy(tasks, soc_file, expected_families=2).families == ["F1", "F2"]
    with pytest.raises(ValueError):
        load_taxonomy(tasks, soc_file, expected_families=28)


def test_load_wage_base(tmp_path):
    path = write(tmp_path / "w.csv", "soc,year,hourly_wage\n15-1132,2010,43.27\n15-1132,2011,44.0\n11-9199,2010,50\n")
    assert load_wage_base(path, 2010) == {parse_soc("15-1132"): 43.27, parse_soc("11-9199"): 50.0}


def test_terciles_one_per_bin():
    assert assign_terciles({"A": 10, "B": 20, "C": 30}) == {"A": L, "B": M, "C": H}


def test_terciles_tie_break_by_code():
    assert assign_terciles({"B": 10, "A": 10, "C": 30}) == {"A": L, "B": M, "C": H}


@pytest.mark.parametrize("n", [1, 2, 3, 4, 5, 964])
def test_tercile_bin_sizes(n):
    out = assign_terciles({f"{k:04d}": float(k + 1) for k in range(n)})
    sizes = tuple(sum(1 for v in out.values() if v is b) for b in (L, M, H))
    assert sizes == tercile_sizes(n)


def test_964_occupations_split():
    assert tercile_sizes(964) == (322, 321, 321)


@pytest.mark.parametrize("bad", [0.0, -1.0, float("nan"), float("inf")])
def test_terciles_reject_bad_wage(bad):
    with pytest.raises(InvalidWage):
        assign_terciles({"A": 10.0, "B": bad})


def test_terciles_empty():
    with pytest.raises(InvalidWage):
        assign_terciles({})


def test_employment_weighted_terciles():
    wages = {"A": 10.0, "B": 20.0, "C": 30.0, "D": 40.0}
    # weight midpoints: A 0.25, B 0.55, C 0.65, D 0.85
    weights = {"A": 50.0, "B": 10.0, "C": 10.0, "D": 30.0}
    assert assign_terciles(wages, weights) == {"A": L, "B": M, "C": M, "D": H}
    assert assign_terciles(wages) == {"A": L, "B": L, "C": M, "D": H}


wage_tables = st.dictionaries(
    st.from_regex(r"[0-9]{2}-[0-9]{4}", fullmatch=True),
    st.floats(0.5, 500, allow_nan=False),
    min_size=1,
    max_size=60,
)


@given(wage_tables)
def test_tercile_partition(wages):
    out = assign_terciles(wages)
    assert set(out) == set(wages)
    assert tuple(sum(1 for v in out.values() if v is b) for b in (L, M, H)) == tercile_sizes(len(wages))


@given(wage_tables)
def test_tercile_monotone(wages):
    out = assign_terciles(wages)
    rank = {L: 0, M: 1, H: 2}
    for a in wages:
        for b in wages:
            if wages[a] < wages[b]:
                assert rank[out[a]] <= rank[out[b]]


@given(wage_tables, st.floats(0.01, 100))
def test_tercile_scale_invariant(wages, c):
    scaled = {k: v * c for k, v in wages.items()}
    # scaling can create or split float ties; compare only when order is unchanged
    order = sorted(wages, key=lambda k: (wages[k], k))
    if order == sorted(scaled, key=lambda k: (scaled[k], k)):
        assert assign_terciles(scaled) == assign_terciles(wages)
