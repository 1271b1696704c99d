"""Virtual haptic workcell simulator.

A simulated Phantom-class stylus served by a 1 kHz haptic loop, a slow scene
loop manipulating solids, serial robots and a mannequin through collision-aware
teleoperation, and an operator web console bridge.
"""

__version__ = "0.1.0"
