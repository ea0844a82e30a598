"""The demo runs end to end and names every setting it changes from the defaults"""

from demo_run import demo_workflow


def test_demo_prints_its_overrides(capsys):
    demo_workflow()
    out = capsys.readouterr().out
    assert "DEMO COMPLETE!" in out
    assert "default sensor and contact settings" in out
    assert "override: noise_sigma 0.01, delta_w 0.25 mm" in out
    assert "✗ Error" not in out
