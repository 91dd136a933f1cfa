#!/usr/bin/env python3
"""A live run you can watch in the dashboard.

Serves the controller API on 127.0.0.1:8700 and replays the DDoS scenario
at 0.5x wall speed, so there is time to watch node .1 turn red and .4/.6
turn amber. Build and serve the dashboard first:

    cd frontend && npm install && npm run build && npm run serve
    # then open http://127.0.0.1:8088/?api=http://127.0.0.1:8700

(Or replay a recorded run without any live API:
    netsentry sim --scenario ddos8 --seed 7 --out out/
    cp -r out frontend/out && cd frontend && npm run serve
    # open http://127.0.0.1:8088/?replay=out/events.json )
"""

import sys

from netsentry.cli import cli

sys.exit(cli([
    "sim", "--scenario", "ddos8", "--seed", "7", "--out", "out-live",
    "--live", "--bind", "127.0.0.1:8700", "--time-ratio", "0.5", "--hold",
]))
