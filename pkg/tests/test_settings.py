import logging

import pytest

import settings


def test_defaults_when_unset(monkeypatch):
    for name in ("ICX_THREADS", "ICX_RESAMPLES", "ICX_LOG_LEVEL", "ICX_STUDY_STATE_FILE"):
        monkeypatch.delenv(name, raising=False)
    assert settings.threads() == 1
    assert settings.resamples() == 1000
    assert settings.log_level() == "INFO"
    assert settings.study_state_file() is None


def test_quoted_values_are_unwrapped(monkeypatch):
    monkeypatch.setenv("ICX_THREADS", " '4' ")
    monkeypatch.setenv("ICX_STUDY_STATE_FILE", '"runs/state.json"')
    assert settings.threads() == 4
    assert settings.study_state_file() == "runs/state.json"


def test_malformed_integer_falls_back_with_warning(monkeypatch, caplog):
    monkeypatch.setenv("ICX_RESAMPLES", "many")
    with caplog.at_level(logging.WARNING, logger="settings"):
        assert settings.resamples() == 1000
    assert "ICX_RESAMPLES" in caplog.text


def test_integer_minimum(monkeypatch):
    monkeypatch.setenv("ICX_THREADS", "0")
    assert settings.threads() == 1


def test_log_level(monkeypatch):
    monkeypatch.setenv("ICX_LOG_LEVEL", "debug")
    assert settings.log_level() == "DEBUG"
    monkeypatch.setenv("ICX_LOG_LEVEL", "chatty")
    assert settings.log_level() == "INFO"


def test_require_env(monkeypatch):
    monkeypatch.delenv("DATABASE_URL", raising=False)
    with pytest.raises(RuntimeError, match="DATABASE_URL is not set"):
        settings.require_env("DATABASE_URL")
    monkeypatch.setenv("DATABASE_URL", "sqlite://")
    assert settings.require_env("DATABASE_URL") == "sqlite://"
