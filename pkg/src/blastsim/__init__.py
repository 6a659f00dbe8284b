"""Design and verification of reduced-scale blast tests on rigid blocks.

* :mod:`blastsim.blastload` - empirical reflected-blast fits and pressure pulses
* :mod:`blastsim.similitude` - pi terms, scale factors and model design
* :mod:`blastsim.rockdyn` - rocking/sliding simulation and critical charge
* :mod:`blastsim.cli` - batch command-line harness
"""

__version__ = "0.1.0"

from .blastload import (  # noqa: E402
    BlastScenario,
    BlastWaveform,
    RectangularPulse,
    WaveformKind,
    friedlander_decay,
    reflected_pressure_peak,
    scaled_distance,
    scaled_reflected_impulse,
    waveform_from_scenario,
)
from .rockdyn import (  # noqa: E402
    Outcome,
    ResponseHistory,
    RigidBlock,
    critical_charge,
    simulate_rocking,
    simulate_sliding,
)
from .similitude import (  # noqa: E402
    ScaleSet,
    design_model,
    scale_set_general,
    scale_set_hopkinson,
    solve_lambda_z,
    upscale_response,
)
