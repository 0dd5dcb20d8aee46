import pytest

from embed_extractor.cli import main


def test_missing_vocab_file_exits_nonzero(tmp_path, capsys):
    rc = main(
        [
            "cls",
            "--model", "some-model",
            "--vocab", str(tmp_path / "absent.json"),
            "--out", str(tmp_path / "out.table"),
        ]
    )
    assert rc == 1
    assert "not found" in capsys.readouterr().err
    assert not (tmp_path / "out.table").exists()


def test_usage_error_exits_2():
    with pytest.raises(SystemExit) as exc:
        main(["api", "--model", "m"])  # missing --vocab/--out
    assert exc.value.code == 2


def test_missing_credentials_surface_as_error(tmp_path, capsys, monkeypatch, mini_vocab_text):
    monkeypatch.delenv("OPENAI_API_KEY", raising=False)
    vocab_path = tmp_path / "v.json"
    vocab_path.write_text(mini_vocab_text)
    rc = main(
        [
            "api",
            "--model", "text-embedding-3-small",
            "--vocab", str(vocab_path),
            "--out", str(tmp_path / "out.table"),
        ]
    )
    assert rc == 1
    assert "credentials" in capsys.readouterr().err
