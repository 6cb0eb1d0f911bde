from .serialization import dumps
from .solver_logger import log_solver_call
