#!/usr/bin/env python3
"""
Demo script to run the tactile workflow end to end on the simulator
"""

import sys

from dotenv import load_dotenv

load_dotenv(override=True)

from calibration import PUBLISHED_FORCE_MODELS, LinearModel
from decay_fitter import fit_decay, window_for
from grasp_controller import ContactConfig, GraspController, SizeEstimationConfig
from produce_analysis import SessionRecord, detect_bruise
from sensor_simulator import SimObject, SimSensorParams, SimulatedGripper, simulate_grasp

SEED = 7


def demo_workflow():
    """Run a demonstration of the complete workflow"""

    print("=" * 70)
    print("TACTILE TOOLKIT - DEMO RUN")
    print("=" * 70)

    # Single grasp
    print("\n1. Simulating one grasp (35 mm object, 2 N/mm, closed to 33 mm)...")
    params = SimSensorParams.from_force_model(PUBLISHED_FORCE_MODELS["dragonskin20"])
    obj = SimObject(35.0, 2.0)
    result = simulate_grasp(obj, [(0.0, 40.0), (2.0, 33.0)], params, SEED)
    print(f"   ✓ {len(result.frames)} frames, true force {result.final_truth.force_n:.2f} N")

    print("\n2. Fitting the transient...")
    trace = result.trace()
    window = window_for(trace)
    fit = fit_decay(trace, window)
    print(f"   peak at {window.t_p:.3f} s, fit window [{window.start:.3f}, {window.end:.3f}] s")
    print(f"   C* = {fit.c_star:.2f} %  (true {result.final_truth.c_true:.2f} %)")
    print(f"   lambda* = {fit.lambda_star:.3f} 1/s, rms {fit.rms_residual:.3f} %")

    # Size estimation
    print("\n3. Estimating object size (true diameter 35 mm, default sensor and contact settings)...")
    defaults = SimSensorParams()
    contact = ContactConfig()
    cfg = SizeEstimationConfig(w_start=45.0, w_min=10.0, delta_w=1.0, contact=contact)
    size = GraspController(SimulatedGripper(obj, defaults, SEED), cfg).estimate_size()
    print(f"   ✓ Size estimate {size:.1f} mm")

    print("\n4. Grasping to 4 N (override: noise_sigma 0.01, delta_w 0.25 mm)...")
    model = LinearModel(1.0 / defaults.settled_slope, 0.0)
    gripper = SimulatedGripper(obj, defaults.with_(noise_sigma=0.01), SEED)
    controller = GraspController(gripper, SizeEstimationConfig(45.0, 10.0, 0.25, contact))
    width, force = controller.grasp_to_force(4.0, 0.5, model)
    print(f"   ✓ Holding at {width:.2f} mm, estimated {force:.2f} N (true {gripper.true_force():.2f} N)")

    # Produce check
    print("\n5. Bruise check against a healthy reference...")
    healthy = SessionRecord("healthy", 0, (-24.1, -25.6, -24.9, -25.3, -24.6), 33.0)
    damaged = SessionRecord("damaged", 1, (-15.2, -16.9, -15.8), 33.0)
    observed = SessionRecord("today", 2, (-16.0, -15.1, -16.4), 33.0)
    verdict = detect_bruise(healthy, observed, damaged=damaged)
    marker = "✗" if verdict.verdict == "anomalous" else "✓"
    print(f"   {marker} {verdict.verdict} (observed {verdict.observed_mean:.2f} %, threshold {verdict.threshold:.2f} %)")

    print("\n" + "=" * 70)
    print("DEMO COMPLETE!")
    print("=" * 70)


if __name__ == "__main__":
    try:
        demo_workflow()
    except KeyboardInterrupt:
        print("\n\nDemo cancelled.")
        sys.exit(0)
    except Exception as e:
        print(f"\n✗ Error: {e}")
        sys.exit(1)
