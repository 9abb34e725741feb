import numpy as np
import pytest
from hypothesis import given, strategies as st

from emoarcs import ingest
from emoarcs.errors import EmptySeries, ParseError, RangeError, ShapeError
from emoarcs.ingest import Corpus, Cut, Modality, VideoMeta


def write(tmp_path, name, text):
    p = tmp_path / name
    p.write_text(text)
    return p


class TestLoadSeries:
    def test_minimal_header(self, tmp_path):
        p = write(tmp_path, "v1.visual.series.csv", "# modality=visual,step=1.0\n0.5\n0.7\n0.2\n")
        s = ingest.load_series(p)
        assert s.values.tolist() == [0.5, 0.7, 0.2]
        assert s.timestep_seconds == 1.0
        assert s.modality is Modality.VISUAL
        assert s.video_id == "v1"
        assert s.window_seconds == 0.0

    def test_full_header(self, tmp_path):
        p = write(tmp_path, "x.csv", "# video_id=abc,modality=audio,step=10,window=20\n0.1\n0.2\n")
        s = ingest.load_series(p)
        assert (s.video_id, s.modality, s.timestep_seconds, s.window_seconds) == ("abc", Modality.AUDIO, 10.0, 20.0)

    @pytest.mark.parametrize("bad", ["1.2", "-0.1", "nan", "inf"])
    def test_out_of_range(self, tmp_path, bad):
        p = write(tmp_path, "v.visual.series.csv", f"# modality=visual,step=1\n0.5\n{bad}\n")
        with pytest.raises(RangeError):
            ingest.load_series(p)

    def test_single_row(self, tmp_path):
        p = write(tmp_path, "v.visual.series.csv", "# modality=visual,step=1\n0.5\n")
        with pytest.raises(EmptySeries):
            ingest.load_series(p)

    @pytest.mark.parametrize("text", [
        "0.5\n0.6\n",                                   # no header
        "# modality=visual,step=1\n0.5\nabc\n",         # not a number
        "# modality=visual,step=1\n0.5,0.6\n0.1\n",     # two columns
        "# modality=smell,step=1\n0.5\n0.6\n",          # unknown modality
        "",
    ])
    def test_malformed(self, tmp_path, text):
        with pytest.raises(ParseError):
            ingest.load_series(write(tmp_path, "v.series.csv", text))

    def test_nonpositive_step(self, tmp_path):
        with pytest.raises(RangeError):
            ingest.load_series(write(tmp_path, "v.visual.series.csv", "# modality=visual,step=0\n0.1\n0.2\n"))


decimals = st.lists(
    st.integers(0, 10 ** 9).map(lambda i: f"0.{i:09d}".rstrip("0") or "0.0"),
    min_size=2, max_size=50,
)


@given(decimals)
def test_series_round_trip_is_bit_exact(tmp_path_factory, texts):
    d = tmp_path_factory.mktemp("rt")
    src = write(d, "v.visual.series.csv", "# modality=visual,step=1.0\n" + "\n".join(texts) + "\n")
    s = ingest.load_series(src)
    out = d / "copy.visual.series.csv"
    ingest.write_series(s, out)
    again = ingest.load_series(out)
    assert again.values.tobytes() == s.values.tobytes()
    assert [float(t) for t in texts] == again.values.tolist()


class TestAnnotations:
    def test_row(self, tmp_path):
        p = write(tmp_path, "a.csv", 'c1,v1,visual-peak,"5;6;5",0.03\n')
        (rec,) = ingest.load_annotations(p)
        assert rec.cut is Cut.VISUAL_PEAK
        assert rec.ratings == (5, 6, 5)
        assert rec.source_stddev == 0.03

    def test_empty_stddev(self, tmp_path):
        p = write(tmp_path, "a.csv", "clip_id,video_id,cut,ratings,source_stddev\nc1,v1,audio-valley,2;3;3,\n")
        (rec,) = ingest.load_annotations(p)
        assert rec.source_stddev is None
        assert rec.ratings == (2, 3, 3)

    def test_rating_out_of_range(self, tmp_path):
        with pytest.raises(RangeError):
            ingest.load_annotations(write(tmp_path, "a.csv", "c1,v1,visual-peak,5;8;5,\n"))

    def test_bad_cut(self, tmp_path):
        with pytest.raises(ParseError):
            ingest.load_annotations(write(tmp_path, "a.csv", "c1,v1,middle,5,\n"))

    def test_round_trip(self, tmp_path):
        recs = [ingest.AnnotationRecord("c1", "v1", Cut.AUDIO_PEAK, (1, 7, 4), 0.015),
                ingest.AnnotationRecord("c2", "v2", Cut.VISUAL_VALLEY, (3,), None)]
        ingest.write_annotations(recs, tmp_path / "a.csv")
        assert ingest.load_annotations(tmp_path / "a.csv") == recs


def _meta(vid, dur):
    return VideoMeta(vid, dur, 2015, 3, frozenset(), Corpus.SHORTS)


class TestDurationFilter:
    def test_shorts_threshold(self):
        metas = [_meta("a", 505), _meta("b", 1900), _meta("c", 1799)]
        out = ingest.filter_by_duration(metas, ingest.MAX_DURATION[Corpus.SHORTS])
        assert [m.duration_seconds for m in out] == [505, 1799]

    def test_huge_bound_is_noop(self):
        metas = [_meta("a", 505), _meta("b", 1900)]
        assert ingest.filter_by_duration(metas, 1e9) == metas

    def test_all_excluded(self):
        assert ingest.filter_by_duration([_meta("a", 20000)], 10000) == []

    def test_boundary_kept(self):
        assert len(ingest.filter_by_duration([_meta("a", 1800)], 1800)) == 1

    @given(st.lists(st.floats(1, 5000), max_size=30), st.floats(1, 5000))
    def test_idempotent_and_order_preserving(self, durs, bound):
        metas = [_meta(str(i), d) for i, d in enumerate(durs)]
        once = ingest.filter_by_duration(metas, bound)
        assert ingest.filter_by_duration(once, bound) == once
        ids = [m.video_id for m in once]
        assert ids == sorted(ids, key=int)


def test_metadata_round_trip(tmp_path):
    metas = [VideoMeta("v1", 505.0, 2014, 12, frozenset({"drama", "romance"}), Corpus.SHORTS),
             VideoMeta("v2", 7200.0, 1999, 0, frozenset(), Corpus.FILMS)]
    ingest.write_metadata(metas, tmp_path / "m.csv")
    assert ingest.load_metadata(tmp_path / "m.csv") == metas


def test_metadata_negative_comments(tmp_path):
    with pytest.raises(RangeError):
        ingest.load_metadata(write(tmp_path, "m.csv", "v1,10,2010,-1,,shorts\n"))


class TestDropout:
    def test_round_trip(self, tmp_path, rng):
        samples = ingest.DropoutSamples("v", Modality.AUDIO, rng.uniform(0, 1, (5, 7)))
        path = tmp_path / "v.audio.dropout.csv"
        ingest.write_dropout(samples, path)
        back = ingest.load_dropout(path)
        assert back.m_passes == 5 and back.length == 7
        assert np.array_equal(back.samples, samples.samples)
        assert back.modality is Modality.AUDIO

    def test_ragged(self, tmp_path):
        with pytest.raises(ShapeError):
            ingest.load_dropout(write(tmp_path, "v.audio.dropout.csv", "# m=2,T=3\n0.1,0.2,0.3\n0.1,0.2\n"))

    def test_header_mismatch(self, tmp_path):
        with pytest.raises(ShapeError):
            ingest.load_dropout(write(tmp_path, "v.audio.dropout.csv", "# m=3,T=2\n0.1,0.2\n0.1,0.2\n"))

    def test_single_pass(self, tmp_path):
        with pytest.raises(ShapeError):
            ingest.load_dropout(write(tmp_path, "v.audio.dropout.csv", "# m=1,T=2\n0.1,0.2\n"))


class TestActivations:
    def test_round_trip(self, tmp_path, rng):
        acts = ingest.ActivationMatrix("v9", rng.normal(size=(12, 3)))
        path = tmp_path / ingest.activations_filename("v9")
        ingest.write_activations(acts, path)
        back = ingest.load_activations(path)
        assert back.video_id == "v9"
        assert np.array_equal(back.activations, acts.activations)

    def test_too_few_frames(self, tmp_path):
        rows = "\n".join("1.0,2.0" for _ in range(9))
        with pytest.raises(ShapeError):
            ingest.load_activations(write(tmp_path, "v.activations.csv", f"# T=9,D=2\n{rows}\n"))
