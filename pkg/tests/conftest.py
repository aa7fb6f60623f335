import pytest

from labelsim.corpus import Annotation, SentencePair, build_corpus


def make_corpus(pair_specs, annotation_specs):
    """Shorthand corpus builder for tests.

    ``pair_specs``: (pair_id, text_a, text_b) or (pair_id, text_a, text_b,
    is_random).  ``annotation_specs``: (pair_id, annotator_id, label) or
    (pair_id, annotator_id, label, duration).
    """
    pairs = []
    for spec in pair_specs:
        pid, text_a, text_b = spec[:3]
        is_random = spec[3] if len(spec) > 3 else False
        pairs.append(SentencePair(pair_id=pid, text_a=text_a, text_b=text_b,
                                  is_random=is_random))
    annotations = []
    for spec in annotation_specs:
        pid, aid, label = spec[:3]
        duration = spec[3] if len(spec) > 3 else 30.0
        annotations.append(Annotation(pair_id=pid, annotator_id=aid,
                                      label=label, duration=duration))
    return build_corpus(pairs, annotations)


@pytest.fixture
def tiny_corpus():
    """Three pairs, three annotators, one random pair."""
    return make_corpus(
        [
            ("p1", "the cat sat on the mat", "a cat sat on a mat"),
            ("p2", "dogs bark loudly", "the stock market fell", True),
            ("p3", "rain falls in spain", "rain in spain falls"),
        ],
        [
            ("p1", "ann1", 5, 20.0),
            ("p1", "ann2", 4, 25.0),
            ("p1", "ann3", 5, 400.0),
            ("p2", "ann1", 1, 15.0),
            ("p2", "ann2", 1, 30.0),
            ("p2", "ann3", 1, 350.0),
            ("p3", "ann1", 4, 22.0),
            ("p3", "ann2", 4, 28.0),
            ("p3", "ann3", 5, 500.0),
        ],
    )
