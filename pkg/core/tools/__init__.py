# Calibration and simulation tools package