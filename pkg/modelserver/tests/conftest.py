"""Shared fixtures: one tiny checkpoint pair and one live server per session.

Building the checkpoints takes a few seconds (tokenizer training plus model
init), so everything below is session-scoped; the models are small enough
that keeping an engine and a serving thread alive for the whole run is
cheap.
"""

import pytest

from modelserver.app import serve_in_thread
from modelserver.checkpoints import build_pair
from modelserver.config import ServerConfig
from modelserver.engine import InferenceEngine


@pytest.fixture(scope="session")
def checkpoint_pair(tmp_path_factory):
    root = tmp_path_factory.mktemp("checkpoints")
    victim_dir, masked_dir = build_pair(root, seed=0)
    return str(victim_dir), str(masked_dir)


@pytest.fixture(scope="session")
def server_config(checkpoint_pair):
    victim_dir, masked_dir = checkpoint_pair
    return ServerConfig(victim_checkpoint=victim_dir,
                        masked_lm_checkpoint=masked_dir,
                        port=0)


@pytest.fixture(scope="session")
def engine(checkpoint_pair):
    victim_dir, masked_dir = checkpoint_pair
    return InferenceEngine(victim_dir, masked_dir)


@pytest.fixture(scope="session")
def server_url(server_config):
    with serve_in_thread(server_config) as base_url:
        yield base_url
