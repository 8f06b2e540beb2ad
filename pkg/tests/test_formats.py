import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from qdiv import coding as cd
from qdiv import formats as fm
from qdiv import quantum as qu
from qdiv import suites
from qdiv.errors import MalformedInput

seeds = st.integers(0, 2 ** 32 - 1)


class TestQmtx:
    @settings(max_examples=60, deadline=None)
    @given(seeds, st.integers(1, 5), st.integers(1, 5))
    def test_round_trip(self, seed, r, c):
        rng = np.random.default_rng(seed)
        M = rng.normal(size=(r, c)) + 1j * rng.normal(size=(r, c))
        text = fm.format_qmtx(M)
        assert np.array_equal(fm.parse_qmtx(text), M)
        assert fm.format_qmtx(fm.parse_qmtx(text)) == text

    def test_layout(self):
        text = fm.format_qmtx(np.array([[1, 2j]]))
        assert text == "QMTX 1 2\n1 0 0 2\n"

    @pytest.mark.parametrize("text", [
        "QMTX 2 2\n1 0 0 0\n0 0\n",
        "QMTX 1 1\n1 0 9\n",
        "QMTX 1 1\nnan 0\n",
        "QMTX 1 1\ninf 0\n",
        "QMTX 0 1\n",
        "QMTX 1 x\n1 0\n",
        "QMTS 1 1\n1 0\n",
        "QMTX 1 1\n1 zero\n",
    ])
    def test_malformed(self, text):
        with pytest.raises(MalformedInput):
            fm.parse_qmtx(text)

    def test_path(self, tmp_path):
        p = tmp_path / "a.qmtx"
        p.write_text(fm.format_qmtx(np.eye(2)))
        assert np.array_equal(fm.parse_qmtx(p), np.eye(2))
        assert np.array_equal(fm.load(str(p)), np.eye(2))


class TestQchn:
    def test_round_trip(self):
        ch = qu.random_channel(2, 3, 2, 4)
        text = fm.format_qchn(ch)
        back = fm.parse_qchn(text)
        assert all(np.array_equal(a, b) for a, b in zip(ch.kraus, back.kraus))
        assert fm.format_qchn(back) == text

    def test_embedded_headers(self):
        text = "QCHN 1 2 2\nQMTX 2 2\n1 0 0 0\n0 0 1 0\n"
        assert np.allclose(fm.parse_qchn(text).kraus[0], np.eye(2))
        with pytest.raises(MalformedInput):
            fm.parse_qchn("QCHN 1 2 2\nQMTX 2 1\n1 0 0 0\n")

    def test_not_trace_preserving(self):
        with pytest.raises(MalformedInput):
            fm.parse_qchn("QCHN 1 1 1\n0.5 0\n")


class TestQsrc:
    def test_round_trip(self):
        states = [np.array([1, 0]), np.array([1, 1j]) / np.sqrt(2)]
        mix = cd.MixedSource([0.3, 0.7], [cd.QuantumSource([0.9, 0.1], states), cd.QuantumSource([0.4, 0.6], states)])
        text = fm.format_qsrc(mix)
        back = fm.parse_qsrc(text)
        assert np.allclose(back.weights, mix.weights)
        assert fm.format_qsrc(back) == text

    def test_memoryless(self):
        src = cd.QuantumSource([0.8, 0.2], [np.array([1, 0]), np.array([0, 1])])
        back = fm.parse_qsrc(fm.format_qsrc(src))
        assert len(back.components) == 1

    @pytest.mark.parametrize("text", [
        "QSRC 1 2 1\n0 0 0 0\n1 1\n",
        "QSRC 1 2 1\n1 0 0 0\n1 0.5\n",
        "QSRC 1 2 1\n1 0 0 0\n0.5 1\n",
        "QSRC 1 2 1\n1 0 0 0\n1 1 extra\n",
    ])
    def test_malformed(self, text):
        with pytest.raises(MalformedInput):
            fm.parse_qsrc(text)


class TestQproto:
    @pytest.mark.parametrize("idx", range(6))
    def test_round_trip(self, idx):
        desc = suites.random_protocol(np.random.default_rng([1, idx]), idx)
        text = fm.format_qproto(desc)
        back = fm.parse_qproto(text)
        assert back.kind == desc.kind and back.dims == desc.dims and back.n == desc.n
        assert fm.format_qproto(back) == text

    def test_state_only(self):
        desc = suites.random_protocol(np.random.default_rng(3), 0)
        desc.encoder = desc.decoder = None
        back = fm.parse_qproto(fm.format_qproto(desc))
        assert back.encoder is None and back.decoder is None

    @pytest.mark.parametrize("patch", [
        ("kind redistribution", "kind teleportation"),
        ("dims ", "dims X=3 "),
        ("dims A=2", "dims A=2 A=2"),
        ("dims A=2", "dims A=two"),
        ("state", "status"),
    ])
    def test_malformed(self, patch):
        desc = suites.random_protocol(np.random.default_rng(3), 0)
        text = fm.format_qproto(desc).replace(*patch, 1)
        with pytest.raises(MalformedInput):
            fm.parse_qproto(text)

    def test_bad_norm(self):
        text = "QPROTO v1\nkind redistribution\ndims A=2 R=2\nstate\nQMTX 4 1\n1 0\n1 0\n0 0\n0 0\n"
        with pytest.raises(MalformedInput):
            fm.parse_qproto(text)


def test_load_dispatch():
    with pytest.raises(MalformedInput):
        fm.load("HELLO 1 2\n")
    with pytest.raises(MalformedInput):
        fm.load("")
    assert isinstance(fm.load(fm.format_qchn(qu.identity_channel(2))), qu.QuantumChannel)
