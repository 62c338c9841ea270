import logging

logger = logging.getLogger("kgp")
