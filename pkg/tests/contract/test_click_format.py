"""Contract tests for click-stream files.

Tests pin the on-disk layout of both formats so that streams written by one
version of the simulator can be analyzed by another.
"""

import struct
from pathlib import Path

import numpy as np
import orjson
import pytest

from cavity_photon_source.photostream.click_format import MAGIC, read_clicks, write_clicks
from cavity_photon_source.photostream.models import CLICK_DTYPE, ClickStream
from cavity_photon_source.utils.error_handler import ClickFormatError, UnsortedStreamError

pytestmark = pytest.mark.contract

COLUMNS = ["t_ps", "detector", "pulse_index", "shot_index", "flags"]


@pytest.fixture
def stream() -> ClickStream:
    return ClickStream(
        np.array([30_000_100_000, 30_000_100_007, 30_001_150_000, 2**40 + 5], dtype=np.uint64),
        np.array([0, 1, 1, 0]),
        np.array([0, 0, 1, 7]),
        np.array([0, 0, 0, 11]),
        np.array([0, 0, 0, 1]),
    )


class TestBinaryLayout:
    """Test the packed binary format."""

    def test_layout(self, stream: ClickStream, tmp_path: Path) -> None:
        """Test magic, header length, JSON header and 18-byte records."""
        raw = write_clicks(stream, tmp_path / "c.bin", format="binary", metadata={"rng_seed": 3}).read_bytes()
        assert raw[:8] == b"CPSCLK01"
        (header_len,) = struct.unpack_from("<I", raw, 8)
        header = orjson.loads(raw[12 : 12 + header_len])
        assert header == {"schema": "click_stream", "version": 1, "records": 4, "rng_seed": 3}
        body = raw[12 + header_len :]
        assert CLICK_DTYPE.itemsize == 18
        assert len(body) == 4 * 18
        assert struct.unpack_from("<QBIIB", body, 3 * 18) == (2**40 + 5, 0, 7, 11, 1)

    def test_read_back(self, stream: ClickStream, tmp_path: Path) -> None:
        read, header = read_clicks(write_clicks(stream, tmp_path / "c.bin", format="binary"))
        assert np.array_equal(read.to_records(), stream.to_records())
        assert header["records"] == 4

    def test_truncated_record(self, stream: ClickStream, tmp_path: Path) -> None:
        path = write_clicks(stream, tmp_path / "c.bin", format="binary")
        path.write_bytes(path.read_bytes()[:-3])
        with pytest.raises(ClickFormatError, match="whole number"):
            read_clicks(path)

    def test_truncated_header(self, tmp_path: Path) -> None:
        path = tmp_path / "c.bin"
        path.write_bytes(MAGIC + b"\x01")
        with pytest.raises(ClickFormatError):
            read_clicks(path)

    def test_corrupt_header(self, tmp_path: Path) -> None:
        path = tmp_path / "c.bin"
        path.write_bytes(MAGIC + struct.pack("<I", 5) + b"{nope")
        with pytest.raises(ClickFormatError, match="JSON"):
            read_clicks(path)


class TestTextLayout:
    """Test the CSV text format."""

    def test_layout(self, stream: ClickStream, tmp_path: Path) -> None:
        """Test the metadata line then a CSV table with the fixed columns."""
        raw = write_clicks(stream, tmp_path / "c.csv", format="text", metadata={"config_hash": "abcd"}).read_bytes()
        first, _, body = raw.partition(b"\n")
        assert first.startswith(b"# ")
        assert orjson.loads(first[2:])["config_hash"] == "abcd"
        lines = body.decode().splitlines()
        assert lines[0].replace('"', "") == ",".join(COLUMNS)
        assert lines[4].replace('"', "") == f"{2**40 + 5},0,7,11,1"

    def test_read_back(self, stream: ClickStream, tmp_path: Path) -> None:
        read, _ = read_clicks(write_clicks(stream, tmp_path / "c.csv", format="text"))
        assert np.array_equal(read.to_records(), stream.to_records())

    def test_empty_stream(self, tmp_path: Path) -> None:
        read, header = read_clicks(write_clicks(ClickStream.empty(), tmp_path / "e.csv", format="text"))
        assert len(read) == 0
        assert header["records"] == 0

    def test_missing_metadata_line(self, tmp_path: Path) -> None:
        path = tmp_path / "c.csv"
        path.write_text("t_ps,detector,pulse_index,shot_index,flags\n1,0,0,0,0\n")
        with pytest.raises(ClickFormatError, match="metadata"):
            read_clicks(path)

    def test_missing_column(self, tmp_path: Path) -> None:
        path = tmp_path / "c.csv"
        path.write_text('# {"schema": "click_stream", "version": 1}\nt_ps,detector\n1,0\n')
        with pytest.raises(ClickFormatError):
            read_clicks(path)

    def test_bad_value(self, tmp_path: Path) -> None:
        path = tmp_path / "c.csv"
        path.write_text(
            '# {"schema": "click_stream", "version": 1}\n'
            "t_ps,detector,pulse_index,shot_index,flags\n-5,0,0,0,0\n"
        )
        with pytest.raises(ClickFormatError):
            read_clicks(path)


class TestHeaderChecks:
    """Test checks common to both formats."""

    @pytest.mark.parametrize("fmt, name", [("text", "c.csv"), ("binary", "c.bin")])
    def test_foreign_schema_rejected(self, stream: ClickStream, tmp_path: Path, fmt: str, name: str) -> None:
        path = write_clicks(stream, tmp_path / name, format=fmt, metadata={"schema": "other"})
        with pytest.raises(ClickFormatError, match="schema"):
            read_clicks(path)

    def test_record_count_mismatch(self, stream: ClickStream, tmp_path: Path) -> None:
        path = write_clicks(stream, tmp_path / "c.bin", format="binary", metadata={"records": 5})
        with pytest.raises(ClickFormatError, match="announces 5"):
            read_clicks(path)

    def test_unsorted_write_rejected(self, stream: ClickStream, tmp_path: Path) -> None:
        reversed_stream = stream.filter(np.arange(len(stream))[::-1])
        with pytest.raises(UnsortedStreamError):
            write_clicks(reversed_stream, tmp_path / "c.bin")

    def test_unsorted_file_rejected(self, stream: ClickStream, tmp_path: Path) -> None:
        path = tmp_path / "c.csv"
        path.write_text(
            '# {"schema": "click_stream", "version": 1, "records": 2}\n'
            "t_ps,detector,pulse_index,shot_index,flags\n20,0,0,0,0\n10,1,0,0,0\n"
        )
        with pytest.raises(UnsortedStreamError):
            read_clicks(path)

    def test_unknown_format(self, stream: ClickStream, tmp_path: Path) -> None:
        with pytest.raises(ClickFormatError):
            write_clicks(stream, tmp_path / "c.xyz", format="parquet")  # type: ignore[arg-type]
