from typing import NewType, Protocol, Sequence

listOfStrings = list[str]
SegmentKey = NewType("SegmentKey", str)


class Segmenter(Protocol):
    """Anything that turns a token sequence into labelled segments."""

    def predict(self, tokens: Sequence[str]) -> tuple: ...


__all__ = [
    "listOfStrings",
    "SegmentKey",
    "Segmenter",
]
