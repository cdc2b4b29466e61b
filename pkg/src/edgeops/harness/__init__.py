from .client import ping, run_client, shutdown
from .daemon import TierDaemon, TierDaemonConfig, serve_tier
from .launcher import HarnessCluster, run_harness_experiment
from .shaping import TokenBucket, token_bucket_send
from .wire import MsgType, WireMessage, decode, read_frame, write_frame

__all__ = [
    "ping", "run_client", "shutdown", "TierDaemon", "TierDaemonConfig", "serve_tier",
    "HarnessCluster", "run_harness_experiment", "TokenBucket", "token_bucket_send", "MsgType",
    "WireMessage", "decode", "read_frame", "write_frame",
]
