"""Shared fixtures: scenario recordings and cached engine runs."""

from __future__ import annotations

import pytest

from desksense.context import MockVisionClient
from desksense.loops import RuleBasedMockReasoner
from desksense.session import SessionEngine
from desksense.streams import open_recording
from desksense.synth import SCENARIO_DEFAULT_DURATION, write_scenario

# 116 RR intervals (ms) whose time-domain metrics reproduce the reference
# stress report: hr 75.3 bpm, sdnn 56.78 ms, rmssd 42.31 ms, pnn20 65.2 %,
# pnn50 28.7 %. Derived by constrained search; verified against the
# brute-force oracle in test_hrv.
RR_REPORT_FIXTURE = [
    827.199, 840.636, 777.497, 840.684, 879.636, 788.545, 725.432, 759.607,
    771.898, 786.235, 756.391, 819.604, 857.075, 841.397, 904.662, 916.589,
    853.481, 867.065, 803.896, 867.378, 856.582, 843.076, 808.586, 874.656,
    860.007, 831.125, 818.115, 850.614, 864.576, 877.504, 889.042, 968.832,
    905.532, 838.428, 776.026, 808.069, 872.348, 843.879, 781.879, 747.772,
    786.977, 819.758, 834.600, 772.607, 783.958, 793.133, 802.742, 836.289,
    830.170, 845.825, 831.993, 814.484, 828.772, 749.017, 732.215, 720.212,
    705.117, 714.401, 793.434, 731.390, 795.682, 716.206, 725.629, 755.440,
    803.421, 835.531, 865.338, 832.517, 802.477, 840.365, 811.867, 747.697,
    710.750, 682.189, 746.270, 775.900, 812.390, 783.738, 795.817, 826.413,
    797.762, 827.350, 791.746, 779.513, 769.480, 704.172, 768.094, 757.023,
    770.752, 804.358, 833.209, 862.135, 847.272, 818.447, 813.985, 741.406,
    701.161, 672.322, 666.076, 730.066, 716.605, 729.721, 809.765, 795.883,
    834.555, 771.381, 768.443, 720.543, 732.189, 795.515, 721.522, 762.093,
    792.304, 762.416, 699.281, 731.164,
]

# Baseline metric values that make the fixture's relative changes match the
# reference report: hr -3.5 %, sdnn +12.4 %, rmssd +8.7 %, pnn20 +5.3 %,
# pnn50 +7.1 % (baseline = current / (1 + change)).
REPORT_CHANGES = {"hr": -3.5, "sdnn": 12.4, "rmssd": 8.7, "pnn20": 5.3, "pnn50": 7.1}


@pytest.fixture(scope="session")
def scenario_dir(tmp_path_factory):
    return tmp_path_factory.mktemp("scenarios")


@pytest.fixture(scope="session")
def recording_for(scenario_dir):
    """Factory returning a parsed recording per scenario name (cached)."""
    cache = {}

    def factory(name: str):
        if name not in cache:
            path = scenario_dir / f"{name}.dsr"
            write_scenario(path, name)
            cache[name] = open_recording(path)
        return cache[name]

    return factory


def fresh_engine(preferences: dict | None = None) -> SessionEngine:
    return SessionEngine(vision_client=MockVisionClient(),
                         reasoner=RuleBasedMockReasoner(),
                         preferences=preferences)


@pytest.fixture(scope="session")
def engine_run_for(recording_for):
    """Factory running a scenario through a fresh engine once (cached)."""
    cache = {}

    def factory(name: str):
        if name not in cache:
            engine = fresh_engine()
            engine.run_recording(recording_for(name),
                                 duration=SCENARIO_DEFAULT_DURATION[name])
            cache[name] = engine
        return cache[name]

    return factory
