import pytest

from synthdet.prompts import PromptScheme, generate_prompts

VOC_SPLIT1_NOVEL = ["bird", "bus", "cow", "motorbike", "sofa"]


def test_none_is_bare_name():
    assert generate_prompts("bird", PromptScheme.NONE) == ["bird"]


def test_a5_bus():
    assert generate_prompts("bus", PromptScheme.A5) == [
        "a bus",
        "a photo of bus",
        "a photo of a bus",
        "a picture of bus",
        "a picture of a bus",
    ]


def test_adj_sofa():
    prompts = generate_prompts("sofa", PromptScheme.ADJ)
    assert len(prompts) == 5
    assert prompts[0] == "a photo of a good sofa"
    assert prompts == [
        "a photo of a good sofa",
        "a photo of a large sofa",
        "a photo of a nice sofa",
        "a photo of a cool sofa",
        "a photo of a clean sofa",
    ]


def test_one5_cow():
    assert generate_prompts("cow", PromptScheme.ONE5) == [
        "one cow",
        "a photo of one cow",
        "a picture of one cow",
        "one photo of cow",
        "one picture of cow",
    ]


def test_real_motorbike():
    assert generate_prompts("motorbike", PromptScheme.REAL) == [
        "real motorbike",
        "a real motorbike",
        "one real motorbike",
        "a photo of a real motorbike",
        "a photo of one real motorbike",
    ]


def test_single_word_schemes():
    assert generate_prompts("bird", PromptScheme.A) == ["a bird"]
    assert generate_prompts("bird", PromptScheme.ONE) == ["one bird"]


def test_empty_category_rejected():
    with pytest.raises(ValueError):
        generate_prompts("", PromptScheme.A5)


@pytest.mark.parametrize("scheme", [s for s in PromptScheme if s != PromptScheme.NONE])
def test_round_trip_unambiguous(scheme):
    # every emitted prompt parses back to (scheme, category) for its prefixes
    from synthdet.prompts import PREFIXES

    for cat in VOC_SPLIT1_NOVEL:
        for prompt, prefix in zip(generate_prompts(cat, scheme), PREFIXES[scheme]):
            assert prompt.startswith(prefix)
            assert prompt[len(prefix):] == cat
