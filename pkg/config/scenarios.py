EXAMPLE1_SCENARIO = """
[scenario]
name = example1
controller = rcesc
description = SISO quadratic map, optimizer jumps from 1 to 5 after 500 s

[plant]
kind = siso_quadratic
reference = 0:1; 500:5
initial_input = 0

[sim]
sample_time = 1
horizon = 1000
substeps = 1

[rcac]
structure = pid
pid_mask = i
r_u = 0.05
p0 = 0.9
penalty = rate
reset_period = 10

[kf]
p0 = 1e-3
q = 0.1
r = 10
lags = 3

[rcesc]
nu = 0.9
eps = 1e-4

[dither]
kind = decaying_sinusoid
amplitude = 0.02
omegas = 6
tau = 100

[esc]
amplitude = 0.2
k_esc = 0.05
omegas = 6
sample_time = 0.05
"""

EXAMPLE2_SCENARIO = """
[scenario]
name = example2
controller = rcesc
description = Two-input quadratic map, optimizer moves from (1, 2) to (-1, -2) after 500 s

[plant]
kind = miso_quadratic
reference = 0:1,2; 500:-1,-2
initial_input = 0, 0

[sim]
sample_time = 1
horizon = 1000
substeps = 1

[rcac]
structure = pid
pid_mask = i
r_u = 0.05
p0 = 0.1
penalty = rate
reset_period = 10

[kf]
p0 = 1e-4
q = 1
r = 0.03
lags = 2, 6

[rcesc]
nu = 0.2
eps = 1e-4

[dither]
kind = decaying_sinusoid
amplitude = 0.1
omegas = 30, 50
tau = 150

[esc]
amplitude = 0.3
k_esc = 0.05
omegas = 30, 50
sample_time = 0.02
"""

EXAMPLE3_SCENARIO = """
[scenario]
name = example3
controller = rcesc
description = Van der Pol oscillator, gains (K1, K2) tuned to quench the limit cycle

[plant]
kind = van_der_pol
initial_state = 2, 0
initial_input = 0, 0
window = 0.5

[sim]
sample_time = 5
horizon = 800
substeps = 50

[rcac]
structure = pid
pid_mask = i
r_u = 0.01
p0 = 0.1
penalty = rate
reset_period = 10

[kf]
p0 = 1e-4
q = 0.01
r = 0.1
lags = 2, 6

[rcesc]
nu = 0.2
eps = 1e-4

[dither]
kind = decaying_sinusoid
amplitude = 0.02
omegas = 3, 5
tau = 500

[esc]
amplitude = 0.2
k_esc = 5
omegas = 3, 5
sample_time = 0.05
highpass = 1
"""

BUILTIN_SCENARIOS = {
    "example1": EXAMPLE1_SCENARIO,
    "example2": EXAMPLE2_SCENARIO,
    "example3": EXAMPLE3_SCENARIO,
}
