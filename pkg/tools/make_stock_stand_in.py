"""Regenerate the bundled synthetic weekly price series.

The series is a stand-in with roughly the shape of a large-cap stock over
2013-2016: a linear trend times the exponential of a stationary AR(1)
fluctuation.  It is not market data.

    python tools/make_stock_stand_in.py > src/exactsde/data/goog_weekly_stand_in.csv
"""

import datetime as dt
import sys

import numpy as np

SEED = 20130401
N_ROWS = 179


def main(out=sys.stdout):
    rng = np.random.default_rng(SEED)
    rho, sd = 0.95, 0.08
    r = np.empty(N_ROWS)
    r[0] = sd * rng.standard_normal()
    for k in range(1, N_ROWS):
        r[k] = rho * r[k - 1] + sd * np.sqrt(1 - rho ** 2) * rng.standard_normal()
    trend = 390.0 + 3.1 * np.arange(N_ROWS)
    price = trend * np.exp(r)
    start = dt.date(2013, 4, 1)
    out.write("date,price\n")
    for k in range(N_ROWS):
        out.write(f"{start + dt.timedelta(weeks=k)},{price[k]:.2f}\n")


if __name__ == "__main__":
    main()
