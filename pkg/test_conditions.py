#!/usr/bin/env python3
"""
Test the text and audio condition encoders and the audio feature files
"""

import os
import sys

import numpy as np
import pytest

# Add the project root to Python path
sys.path.insert(0, os.path.dirname(__file__))

from app.motion.synthetic import beat_profile
from app.services.audio import (
    beats_from_pulse,
    downsample_audio,
    read_audio_features,
    synth_audio_features,
    synth_speech_features,
    write_audio_features,
)
from app.services.embedding import TextEmbedderFactory, embed_text
from app.utils.errors import ConfigError, ContractError, DataError
from app.utils.text import tokenize


def test_tokenize_normalizes_case_accents_and_punctuation():
    assert tokenize("Walk, FORWARD!") == ["walk", "forward"]
    assert tokenize("Café dance") == ["cafe", "dance"]
    assert tokenize("  ") == []


def test_text_embedding_is_deterministic_per_seed():
    print("🧪 Testing text embeddings")
    a = embed_text("dance to the beat", seed=0, dim=16)
    b = embed_text("dance to the beat", seed=0, dim=16)
    c = embed_text("dance to the beat", seed=1, dim=16)
    assert a.embedding.shape == (4, 16)
    assert a.tokens == ["dance", "to", "the", "beat"]
    assert np.array_equal(a.embedding, b.embedding)
    assert not np.array_equal(a.embedding, c.embedding)
    # a token embeds the same wherever it appears
    d = embed_text("the dance", seed=0, dim=16)
    np.testing.assert_array_equal(d.embedding[1], a.embedding[0])


def test_text_embedding_contracts():
    with pytest.raises(ContractError):
        embed_text("!!!", dim=8)
    with pytest.raises(ConfigError):
        TextEmbedderFactory.create_embedder(kind="clip")
    with pytest.raises(ConfigError):
        TextEmbedderFactory.create_embedder(dim=0)
    embedder = TextEmbedderFactory.create_embedder(dim=8)
    assert embedder.pooled("walk forward").shape == (8,)
    assert len(embedder.embed_many(["walk", "wave arms"])) == 2


def test_music_features_pulse_on_the_beat():
    print("🧪 Testing synthetic music features")
    audio = synth_audio_features(120.0, 4.0, channels=8, seed=0, fps=20.0, phase=0.1)
    assert audio.features.shape == (80, 8)
    assert audio.source == "music"
    np.testing.assert_allclose(audio.beat_times, 0.1 + 0.5 * np.arange(8))
    np.testing.assert_allclose(beats_from_pulse(audio.features, 20.0), audio.beat_times)
    pulse_frames = np.nonzero(audio.features[:, 0])[0]
    np.testing.assert_array_equal(pulse_frames, 2 + 10 * np.arange(8))
    # the two-beat phase channel peaks and troughs on alternate beats
    np.testing.assert_allclose(audio.features[pulse_frames, 1], [1.0, -1.0] * 4, atol=1e-12)
    assert audio.meta["bpm"] == 120.0


def test_music_phase_channel_follows_the_dance_profile():
    audio = synth_audio_features(120.0, 2.0, channels=4, seed=0, fps=20.0, phase=0.3)
    times = np.arange(40) / 20.0
    np.testing.assert_allclose(audio.features[:, 1], beat_profile(times, 0.5, 0.3), atol=1e-12)


def test_music_features_are_seeded():
    a = synth_audio_features(100.0, 2.0, channels=6, seed=3)
    b = synth_audio_features(100.0, 2.0, channels=6, seed=3)
    c = synth_audio_features(100.0, 2.0, channels=6, seed=4)
    assert np.array_equal(a.features, b.features)
    assert not np.array_equal(a.features[:, 3:], c.features[:, 3:])
    np.testing.assert_array_equal(a.features[:, :3], c.features[:, :3])


def test_music_feature_contracts():
    with pytest.raises(ContractError):
        synth_audio_features(0.0, 2.0)
    with pytest.raises(ContractError):
        synth_audio_features(120.0, 2.0, channels=2)
    with pytest.raises(ContractError):
        synth_audio_features(120.0, -1.0)


def test_speech_features_have_irregular_onsets():
    print("🧪 Testing synthetic speech features")
    audio = synth_speech_features(5.0, channels=8, seed=1, fps=20.0, syllable_rate=4.0, jitter=0.3)
    assert audio.source == "speech"
    assert audio.features.shape == (100, 8)
    gaps = np.diff(audio.beat_times)
    assert np.all(gaps > 0)
    assert gaps.std() > 0
    assert 10 <= len(audio.beat_times) <= 30
    envelope = audio.features[:, 1]
    assert np.all((envelope >= 0) & (envelope <= 1))
    np.testing.assert_allclose(envelope[np.round(audio.beat_times * 20).astype(int)], 1.0)


def test_downsample_audio():
    features = np.linspace(0.0, 1.0, 61)[:, None] * np.ones((1, 3))
    down = downsample_audio(features, 60.0, 20.0)
    assert down.shape == (21, 3)
    np.testing.assert_allclose(down[:, 0], np.linspace(0.0, 1.0, 21))
    with pytest.raises(ContractError):
        downsample_audio(features, 10.0, 20.0)
    with pytest.raises(ContractError):
        downsample_audio(features[:1], 60.0, 20.0)


def test_audio_file_round_trip(tmp_path):
    print("🧪 Testing audio feature files")
    audio = synth_audio_features(90.0, 3.0, channels=5, seed=2)
    path = str(tmp_path / "music.txt")
    write_audio_features(path, audio.features, fps=20.0, source="music")
    loaded = read_audio_features(path)
    assert loaded.source == "music" and loaded.fps == 20.0
    assert np.array_equal(loaded.features, audio.features)

    fast = str(tmp_path / "fast.txt")
    write_audio_features(fast, np.random.default_rng(0).standard_normal((61, 4)), fps=60.0, source="speech")
    downsampled = read_audio_features(fast)
    assert downsampled.features.shape == (21, 4)
    assert downsampled.fps == 20.0 and downsampled.source == "speech"


def test_slow_audio_file_is_brought_up_to_the_motion_rate(tmp_path):
    slow = str(tmp_path / "slow.txt")
    ramp = np.stack([np.arange(11.0), -np.arange(11.0)], axis=1)
    write_audio_features(slow, ramp, fps=10.0)
    loaded = read_audio_features(slow)
    assert loaded.fps == 20.0
    assert loaded.features.shape == (21, 2)
    np.testing.assert_allclose(loaded.features[:, 0], np.arange(21) / 2.0, atol=1e-12)
    np.testing.assert_allclose(loaded.features[:, 1], -np.arange(21) / 2.0, atol=1e-12)

    single = str(tmp_path / "single.txt")
    write_audio_features(single, ramp[:1], fps=10.0)
    with pytest.raises(DataError):
        read_audio_features(single)


def test_malformed_audio_files(tmp_path):
    no_header = tmp_path / "no_header.txt"
    no_header.write_text("1 2 3\n4 5 6\n")
    with pytest.raises(DataError):
        read_audio_features(str(no_header))

    wrong_width = tmp_path / "wrong_width.txt"
    wrong_width.write_text("# fps=20 channels=4\n1 2 3\n4 5 6\n")
    with pytest.raises(DataError):
        read_audio_features(str(wrong_width))

    with pytest.raises(DataError):
        read_audio_features(str(tmp_path / "missing.txt"))


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-v"]))
