# Units
from pint import UnitRegistry
ureg = UnitRegistry(case_sensitive=True)
Q_ = ureg.Quantity

# Import Inform for all modules
from inform import Inform, warn, fatal, error, display, comment, log, output, InformantFactory, debug
succeed = InformantFactory(message_color='green')
informer = Inform()


class BfstripError(Exception):
    """
    Base class of all errors raised by bfstrip.
    The CLI maps ConfigError to exit code 2 and every other BfstripError to exit code 1.
    """
    def __init__(self, message):
        self.message = message
        super().__init__(self.message)

    def __str__(self):
        return self.message
