import pytest

from src.main import EXIT_ERROR, EXIT_NONREGULAR, EXIT_REGULAR, EXIT_REJECTED, main
from tests.conftest import fixture_path


def F(name):
    return str(fixture_path(name))


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def test_decide_nonregular(capsys):
    code, out, _ = run(capsys, "decide", "--wta", F("hom_image.wtg"), "--hom", F("hom_image.hom"))
    assert code == EXIT_NONREGULAR == 10
    assert out.startswith("RESULT: NONREGULAR\n")


def test_decide_regular_with_output_files(capsys, tmp_path):
    code, out, _ = run(capsys, "decide", "--wta", F("relabel.wtg"), "--hom", F("relabel.hom"),
                       "--out", str(tmp_path))
    assert code == EXIT_REGULAR
    assert out.startswith("RESULT: REGULAR\ncertificate: lin_R' with 3 rules\n")
    assert f"certificate: {tmp_path / 'certificate.wtg'}" in out.splitlines()
    assert (tmp_path / "report.txt").exists()
    assert (tmp_path / "image.wtah").exists()


def test_decide_rejects_homomorphisms_that_are_not_tetris_free(capsys):
    code, out, err = run(capsys, "decide", "--wta", F("B.wtg"), "--hom", F("h_star.hom"))
    assert code == EXIT_REJECTED
    assert out == "TETRIS-FREE: no\nwitness: psi(gamma(alpha),alpha) and phi(alpha,alpha)\n"
    assert "rejected:" in err


def test_decide_rejects_mismatched_alphabets(capsys):
    code, _, err = run(capsys, "decide", "--wta", F("B.wtg"), "--hom", F("hom_image.hom"))
    assert code == EXIT_ERROR
    assert "error:" in err


def test_wrong_object_kind(capsys):
    code, _, err = run(capsys, "decide", "--wta", F("image_of_a.wtah"), "--hom", F("hom_image.hom"))
    assert code == EXIT_ERROR
    assert "expected a Wtg" in err


def test_missing_file(capsys, tmp_path):
    code, _, _ = run(capsys, "zero", "--wtg", str(tmp_path / "nothing.wtg"))
    assert code == EXIT_ERROR


def test_eval(capsys):
    assert run(capsys, "eval", "--wtah", F("image_of_a.wtah"), "--tree", "f(a,g(a,a),g(a,a))")[:2] == (0, "2\n")
    assert run(capsys, "eval", "--wtg", F("relabel.wtg"), "--tree", "psi(gamma(alpha),alpha)")[:2] == (0, "-3/2\n")
    assert run(capsys, "eval", "--wtah", F("image_of_a.wtah"), "--wtg", F("relabel.wtg"), "--tree", "a")[0] == 1
    assert run(capsys, "eval", "--wtah", F("image_of_a.wtah"), "--tree", "h(a)")[0] == EXIT_ERROR


def test_oracle_image(capsys):
    code, out, _ = run(capsys, "oracle-image", "--wta", F("hom_image.wtg"), "--hom", F("hom_image.hom"),
                       "--max-height", "3")
    assert code == EXIT_REGULAR
    assert out.startswith("ORACLE: pass\n")
    code, out, _ = run(capsys, "oracle-image", "--wta", F("hom_image.wtg"), "--hom", F("hom_image.hom"),
                       "--image", F("image_corrupt.wtah"), "--max-height", "3")
    assert code == EXIT_ERROR
    assert "first mismatch: f(g(a,a),a,a) (preimage sum 2, image 3)" in out


@pytest.mark.parametrize("hom,code,lines", [
    ("hom_image.hom", EXIT_REGULAR, ["TETRIS-FREE: yes"]),
    ("tetris.hom", EXIT_REGULAR, ["TETRIS-FREE: yes"]),
    ("tetris_prime.hom", EXIT_REJECTED, ["TETRIS-FREE: no", "witness: psi(alpha,alpha) and beta"]),
    ("unrealisable_tiling.hom", EXIT_REJECTED, ["TETRIS-FREE: inconclusive"]),
])
def test_tetris_free(capsys, hom, code, lines):
    result, out, _ = run(capsys, "tetris-free", "--hom", F(hom))
    assert result == code
    assert out.splitlines() == lines


def test_decide_reports_an_inconclusive_tetris_check(capsys):
    code, out, err = run(capsys, "decide", "--wta", F("unrealisable_tiling.wtg"),
                         "--hom", F("unrealisable_tiling.hom"), "--oracle-height", "2")
    assert code == EXIT_REJECTED
    assert out == "TETRIS-FREE: inconclusive\n"
    assert "could not be shown tetris-free" in err
    assert "up to height 2" in err


def test_ldp(capsys):
    code, out, _ = run(capsys, "ldp", "--wtah", F("image_of_a.wtah"))
    assert code == EXIT_NONREGULAR
    lines = out.splitlines()
    assert lines[0] == "LDP: yes"
    assert lines[1].startswith("N=2 hat_states=2 basis_dimension=")
    assert lines[2] == "witness: f(a,g(a,g(a,a)),g(a,g(a,a))) at e, constrained 2, height 2"
    code, out, _ = run(capsys, "ldp", "--wta", F("hom_image.wtg"), "--hom", F("hom_image.hom"))
    assert code == EXIT_NONREGULAR
    code, out, _ = run(capsys, "ldp", "--wtah", F("fin.wtah"))
    assert code == EXIT_REGULAR
    assert out.splitlines()[0] == "LDP: no"


def test_ldp_rejections(capsys):
    assert run(capsys, "ldp", "--wtah", F("cancelling_ldp.wtah"))[0] == EXIT_REJECTED
    assert run(capsys, "ldp", "--wtah", F("image_not_restricted.wtah"))[0] == EXIT_REJECTED
    assert run(capsys, "ldp")[0] == EXIT_ERROR


def test_linearize(capsys):
    code, out, _ = run(capsys, "linearize", "--wtah", F("fin.wtah"))
    assert code == EXIT_REGULAR
    assert out.splitlines()[0] == "wtg lin_fin over Q {"
    assert "  rule f(a,a) -> qf @ 1;" in out.splitlines()
    assert run(capsys, "linearize", "--wtah", F("image_of_a.wtah"), "--check")[0] == EXIT_ERROR


def test_zero(capsys):
    code, out, _ = run(capsys, "zero", "--wtg", F("hom_image.wtg"))
    assert code == EXIT_REGULAR
    assert out == "ZERO: no\ndimension=2\nwitness: psi(alpha,alpha) (value 1)\n"


def test_hat(capsys):
    code, out, _ = run(capsys, "--log-level", "WARNING", "hat", "--wtah", F("image_of_a.wtah"),
                       "--tree", "f(a,g(a,a),g(a,a))")
    assert code == EXIT_REGULAR
    assert out == "[f(BOT,BOT,BOT)](a,[g(a,BOT)](a))\n"
    assert run(capsys, "hat", "--wtah", F("B_prime.wtah"), "--tree", "f(a,g(a,a),g(a,a))")[0] == EXIT_ERROR
