from __future__ import annotations

import json

import pytest

from adintel.errors import IngestIoError, NotFound
from adintel.store import AdStore, FilterSpec, content_id, normalize_text

from conftest import ad_record, write_jsonl


def test_normalize_text_collapses_whitespace():
    assert normalize_text("  a \t b\n\nc  ") == "a b c"


def test_content_id_deterministic_and_ref_order_free():
    a = content_id("B", "hello  world", ["m2", "m1"])
    b = content_id("B", "hello world", ["m1", "m2"])
    assert a == b
    assert content_id("B", "hello world", []) != a


def test_ingest_empty_file(tmp_path):
    src = tmp_path / "ads.jsonl"
    src.write_text("", encoding="utf-8")
    report = AdStore(tmp_path / "store").ingest_ads(src)
    assert (report.read, report.accepted, report.duplicates, report.rejected) == (0, 0, 0, 0)


def test_ingest_five_lines_two_identical(tmp_path):
    records = [
        ad_record(body="First ad body."),
        ad_record(body="Second ad body."),
        ad_record(body="First ad body."),  # byte-identical to line 1
        ad_record(body="Third ad body."),
        ad_record(body="Fourth ad body."),
    ]
    src = write_jsonl(tmp_path / "ads.jsonl", records)
    report = AdStore(tmp_path / "store").ingest_ads(src)
    assert (report.read, report.accepted, report.duplicates, report.rejected) == (5, 4, 1, 0)


def test_ingest_missing_body_rejected(tmp_path):
    rec = ad_record()
    del rec["body_text"]
    src = write_jsonl(tmp_path / "ads.jsonl", [rec])
    report = AdStore(tmp_path / "store").ingest_ads(src)
    assert report.rejected == 1
    assert report.reject_reasons == [(1, "missing body_text")]


def test_ingest_malformed_line_does_not_abort(tmp_path):
    src = tmp_path / "ads.jsonl"
    src.write_text(json.dumps(ad_record()) + "\nnot json at all\n", encoding="utf-8")
    report = AdStore(tmp_path / "store").ingest_ads(src)
    assert report.accepted == 1
    assert report.rejected == 1
    assert report.reject_reasons[0][1] == "malformed line"


def test_ingest_missing_source_aborts(tmp_path):
    with pytest.raises(IngestIoError):
        AdStore(tmp_path / "store").ingest_ads(tmp_path / "nope.jsonl")


def test_ingest_idempotent(tmp_path):
    records = [ad_record(body=f"Body {i}.") for i in range(4)]
    src = write_jsonl(tmp_path / "ads.jsonl", records)
    store = AdStore(tmp_path / "store")
    first = store.ingest_ads(src)
    assert first.accepted == 4
    before = [a.to_dict() for a in store.all_ads()]
    second = store.ingest_ads(src)
    assert second.accepted == 0
    assert second.duplicates == first.accepted
    assert [a.to_dict() for a in store.all_ads()] == before


def test_ingest_bad_dates_rejected(tmp_path):
    records = [
        ad_record(body="A.", first_seen="2023-13-45"),
        ad_record(body="B.", first_seen="2023-12-01", last_seen="2023-01-01"),
    ]
    src = write_jsonl(tmp_path / "ads.jsonl", records)
    report = AdStore(tmp_path / "store").ingest_ads(src)
    assert report.rejected == 2
    reasons = [r for _, r in report.reject_reasons]
    assert "malformed date (expected YYYY-MM-DD)" in reasons
    assert "first_seen after last_seen" in reasons


def test_brand_hint_fills_missing_brand(tmp_path):
    rec = ad_record(body="No brand here.")
    del rec["brand"]
    src = write_jsonl(tmp_path / "ads.jsonl", [rec])
    store = AdStore(tmp_path / "store")
    assert store.ingest_ads(src, brand_hint="Hinted").accepted == 1
    assert store.all_ads()[0].brand == "Hinted"


@pytest.fixture
def populated(tmp_path):
    records = [
        ad_record(brand="Carvia", body="Corporate rides for business travel.",
                  first_seen="2023-10-01", last_seen="2023-10-20"),
        ad_record(brand="Carvia", body="Family weekend getaway deals.",
                  first_seen="2023-11-01", last_seen="2023-11-20"),
        ad_record(brand="Loopwise", body="Corporate dashboards for ops.",
                  first_seen="2023-10-05", last_seen="2023-10-25"),
        ad_record(brand="Loopwise", body="Instant insights for founders.",
                  first_seen="2023-12-01", last_seen="2023-12-20"),
    ]
    src = write_jsonl(tmp_path / "ads.jsonl", records)
    store = AdStore(tmp_path / "store")
    assert store.ingest_ads(src).accepted == 4
    return store


def test_filter_no_clauses_returns_all_sorted(populated):
    ads = populated.filter_ads(FilterSpec())
    assert len(ads) == 4
    assert [(a.brand, a.id) for a in ads] == sorted((a.brand, a.id) for a in ads)


def test_filter_keyword_any_case_insensitive(populated):
    ads = populated.filter_ads(FilterSpec(keyword_any=["corporate"]))
    assert len(ads) == 2
    assert all("corporate" in a.body_text.lower() for a in ads)


def test_filter_date_range_excluding_all(populated):
    assert populated.filter_ads(FilterSpec(date_range=("2020-01-01", "2020-02-01"))) == []


def test_filter_conjunction_is_subset(populated):
    base = populated.filter_ads(FilterSpec(brands=["Carvia"]))
    both = populated.filter_ads(FilterSpec(brands=["Carvia"], keyword_any=["corporate"]))
    base_ids = {a.id for a in base}
    assert all(a.id in base_ids for a in both)


def test_filter_adding_clauses_only_shrinks_randomized(populated):
    import random

    rng = random.Random(17)
    brand_pool = [["Carvia"], ["Loopwise"], ["Carvia", "Loopwise"], ["Other"]]
    keyword_pool = [["corporate"], ["insights"], ["deals"], ["zzz"], ["for"]]
    range_pool = [("2023-10-01", "2023-10-31"), ("2023-11-01", "2023-12-31"),
                  ("2020-01-01", "2020-12-31"), ("2023-01-01", "2024-12-31")]
    for _ in range(200):
        a = FilterSpec(
            brands=rng.choice([None, *brand_pool]),
            keyword_any=rng.choice([None, *keyword_pool]),
            date_range=rng.choice([None, *range_pool]),
        )
        # conjoin one extra clause of a kind A leaves unset
        extra = dict(brands=a.brands, keyword_any=a.keyword_any,
                     keyword_all=a.keyword_all, date_range=a.date_range)
        candidates = [k for k in ("brands", "keyword_all", "date_range")
                      if extra[k] is None]
        if not candidates:
            continue
        clause = rng.choice(candidates)
        extra[clause] = rng.choice(
            brand_pool if clause == "brands"
            else keyword_pool if clause == "keyword_all"
            else range_pool)
        conjoined = FilterSpec(**extra)

        superset = {ad.id for ad in populated.filter_ads(a)}
        assert all(ad.id in superset for ad in populated.filter_ads(conjoined))


def test_filter_keyword_all(populated):
    ads = populated.filter_ads(FilterSpec(keyword_all=["instant", "founders"]))
    assert len(ads) == 1


def test_filter_invalid_date_range(populated):
    with pytest.raises(ValueError):
        populated.filter_ads(FilterSpec(date_range=("2023-12-01", "2023-01-01")))


def test_get_ad_known_and_unknown(populated):
    ad = populated.all_ads()[0]
    assert populated.get_ad(ad.id).body_text == ad.body_text
    with pytest.raises(NotFound):
        populated.get_ad("does-not-exist")


def test_get_ad_after_dedup_returns_survivor(tmp_path):
    records = [ad_record(body="Same body."), ad_record(body="Same body.")]
    src = write_jsonl(tmp_path / "ads.jsonl", records)
    store = AdStore(tmp_path / "store")
    report = store.ingest_ads(src)
    assert report.duplicates == 1
    survivor = store.all_ads()[0]
    assert store.get_ad(survivor.id).id == survivor.id


def test_store_roundtrip_reload(tmp_path, populated):
    reloaded = AdStore(populated.root)
    assert [a.to_dict() for a in reloaded.all_ads()] == \
        [a.to_dict() for a in populated.all_ads()]


def test_unknown_platform_maps_to_other(tmp_path):
    src = write_jsonl(tmp_path / "ads.jsonl", [ad_record(platform="tiktok")])
    store = AdStore(tmp_path / "store")
    store.ingest_ads(src)
    assert store.all_ads()[0].platform == "other"
