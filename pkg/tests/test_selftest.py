import io
import os
import subprocess
import sys

from pretlab.selftest import CHECKS, main, run_selftest


def test_fresh_build_passes(capsys):
    assert main() == 0
    out = capsys.readouterr().out
    assert out.count("PASS") == len(CHECKS)


def test_g_sign_fault_is_detected():
    stream = io.StringIO()
    failed, precondition = run_selftest("g-sign", stream)
    assert not precondition
    assert "G(4a)=0 and G(2a)=-4G(a) identities" in failed


def test_fault_exit_code(capsys):
    assert main("g-sign") == 1
    assert "G(2a)=-4G(a)" in capsys.readouterr().err


def test_small_sieve_limit_is_a_precondition_failure():
    env = dict(os.environ, PRETLAB_SIEVE_LIMIT="1000")
    proc = subprocess.run([sys.executable, "-m", "pretlab.cli", "selftest"], capture_output=True, text=True, env=env)
    assert proc.returncode == 2
    assert "ERROR" in proc.stdout
