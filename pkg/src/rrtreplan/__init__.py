from ._accel import USE_NUMBA, backend_name
