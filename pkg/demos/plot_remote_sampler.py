"""
Sampling over HTTP
==================

The remote backend ships each block QUBO to a sampling service. Here the
service is the bundled loopback server wrapping the local annealer, which is
how a hardware sampler would be attached.
"""

import numpy as np

from hybridsor import AnnealConfig
from hybridsor.annealer import RemoteBackend
from hybridsor.remote import make_sampler_server, serve_in_thread

server = make_sampler_server()
url = serve_in_thread(server)
print("sampler listening at", url)

# %%
# A 3x3 block solved through the service; every returned energy is
# re-evaluated locally before it is trusted.

A = np.array([[-4.0, 1.0, 0.0], [1.0, -4.0, 1.0], [0.0, 1.0, -4.0]])
z_true = np.array([12.5, 40.0, 77.0])
backend = RemoteBackend(url, AnnealConfig(bits=7, reads=50, seed=3))
z = backend.solve_block(A, A @ z_true)
print("remote:", np.round(z, 3), " exact:", z_true)
print("diagnostics:", backend.diagnostics())

server.shutdown()
server.server_close()
