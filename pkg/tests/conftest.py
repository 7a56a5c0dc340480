"""Shared fixtures."""

import numpy as np
import pytest

from bcresnet.audio.features import CLIP_SAMPLES
from bcresnet.audio.io import write_wav


@pytest.fixture
def make_corpus():
    """Factory writing a miniature Speech Commands tree.

    ``word/<i>.wav`` files are created for every word; index 0 is listed for
    testing, index 1 for validation and one two-second background clip is
    added.
    """

    def make(root, words):
        validation, testing = [], []
        tone = 0.1 * np.sin(np.arange(CLIP_SAMPLES) / 5.0)
        for word, count in words.items():
            for index in range(count):
                write_wav(root / word / f"{index}.wav", tone)
                rel = f"{word}/{index}.wav"
                if index == 0:
                    testing.append(rel)
                elif index == 1:
                    validation.append(rel)
        (root / "validation_list.txt").write_text("\n".join(validation) + "\n")
        (root / "testing_list.txt").write_text("\n".join(testing) + "\n")
        write_wav(root / "_background_noise_" / "white.wav", 0.05 * np.ones(2 * CLIP_SAMPLES))
        return root

    return make
