'''
Exceptions raised by the airy_bounce package.

Every exception carries the exit code the command line maps it to.
'''


class AiryBounceError(Exception):
    '''
    Base class for all the errors raised by the package.
    '''
    exit_code = 1


class ConfigError(AiryBounceError):
    '''
    The run configuration can not be parsed or validated.

    The key_path attribute names the offending key as a dotted path,
    like `wavepacket.z0_m`. The line and column attributes are filled
    for syntax errors in the configuration file.
    '''
    exit_code = 2

    def __init__(self, message, key_path=None, line=None, column=None):
        self.key_path = key_path
        self.line = line
        self.column = column
        if key_path:
            message = '%s: %s' % (key_path, message)
        if line is not None:
            message = '%s (line %s, column %s)' % (message, line, column)
        super(ConfigError, self).__init__(message)


class DomainError(AiryBounceError, ValueError):
    '''
    A physical input is out of its domain: non-finite, non-positive,
    or outside the allowed band.
    '''
    exit_code = 3


class UsageError(AiryBounceError, ValueError):
    '''
    The API is used against its contract, like bouncing an amplitude twice
    through `bounce` or passing a grid which is not a power of two.
    '''
    exit_code = 3


class NumericsError(AiryBounceError):
    '''
    A numerical guard has fired.
    '''
    exit_code = 3


class GridError(NumericsError):
    '''
    The norm canary failed: the grid does not capture the wave.
    '''


class ResolutionError(NumericsError):
    '''
    The grid is too coarse for the phase it should resolve.
    '''


class WindowError(NumericsError):
    '''
    Requested coordinates lie outside of a computed grid.
    '''


class AiryRangeError(NumericsError):
    '''
    An Airy function overflows or is requested outside its supported range.
    '''


class StepError(NumericsError):
    '''
    Finite differences disagree when the step is halved.
    '''


class ModelValidityError(AiryBounceError):
    '''
    The semiclassical model is used out of its validity range.
    '''
    exit_code = 4


class ModelDomainError(ModelValidityError):
    '''
    The semiclassical model is evaluated where its reduced variables are undefined.
    '''
