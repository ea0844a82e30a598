#!/usr/bin/env python3
"""
Setup check for the tactile toolkit: interpreter, packages and a seeded smoke run
"""

import sys


def check_python_version():
    """Check Python version"""
    print("1. Checking Python version...")
    version = sys.version_info
    if version.major >= 3 and version.minor >= 9:
        print(f"   ✓ Python {version.major}.{version.minor}.{version.micro}")
        return True
    print(f"   ✗ Python {version.major}.{version.minor}.{version.micro} (requires 3.9+)")
    return False


def check_dependencies():
    """Check if required packages are installed"""
    print("\n2. Checking dependencies...")
    missing = []
    for package in ("numpy", "scipy", "dotenv"):
        try:
            __import__(package)
            print(f"   ✓ {package}")
        except ImportError:
            print(f"   ✗ {package} (missing)")
            missing.append(package)

    if missing:
        print("\n   Install missing packages with: pip install -r requirements.txt")
        return False
    return True


def check_smoke_run():
    """Simulate a seeded grasp and fit it"""
    print("\n3. Running a seeded simulation and fit...")
    try:
        from decay_fitter import fit_decay, window_for
        from sensor_simulator import SimObject, SimSensorParams, simulate_grasp

        result = simulate_grasp(SimObject(35.0, 2.0), [(0.0, 40.0), (2.0, 33.0)], SimSensorParams(), seed=1)
        trace = result.trace()
        fit = fit_decay(trace, window_for(trace, t_c=15.0))
        error = abs(fit.c_star - result.final_truth.c_true)
        if error < 2.0:
            print(f"   ✓ C* {fit.c_star:.2f} % vs true {result.final_truth.c_true:.2f} %")
            return True
        print(f"   ✗ C* {fit.c_star:.2f} % is {error:.2f} % off the true value")
        return False
    except Exception as e:
        print(f"   ✗ Smoke run failed: {e}")
        return False


def main():
    print("=" * 70)
    print("TACTILE TOOLKIT - SETUP CHECK")
    print("=" * 70 + "\n")

    checks = [check_python_version(), check_dependencies()]
    if all(checks):
        checks.append(check_smoke_run())

    print("\n" + "=" * 70)
    if all(checks):
        print("✓ ALL CHECKS PASSED!")
        print("=" * 70)
        print("\nRun the CLI with: python main.py --help")
        return 0
    print("✗ SOME CHECKS FAILED")
    print("=" * 70)
    return 1


if __name__ == "__main__":
    sys.exit(main())
