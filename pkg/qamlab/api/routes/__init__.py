from qamlab.api.routes.alternation import router as alternation_router
from qamlab.api.routes.halting import router as halting_router
from qamlab.api.routes.protocols import router as protocols_router
from qamlab.api.routes.root import router as root_router
from qamlab.api.routes.subset_sum import router as subset_sum_router
from qamlab.api.routes.trees import router as trees_router
