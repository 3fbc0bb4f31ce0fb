import asyncio
import functools
import logging
import types
from enum import Enum
from typing import Any, Callable, List, NamedTuple, Optional, Type, Union

from .exceptions import ConditionsNotMet, InvalidStartState

logger = logging.getLogger(__name__)

StateValue = Union[bool, int, str, Enum]
ALLOWED_TYPES = (str, bool, int, Enum)


class StateMachine:
    def __init__(self):
        try:
            self.state
        except AttributeError:
            raise ValueError("Need to set a state instance variable")

    def _enter(self, state: StateValue, via: str):
        if state != self.state:
            logger.debug(f"{self.__class__.__name__}: {self.state} -> {state} ({via})")
        self.state = state


class Transition(NamedTuple):
    name: str
    source: List[StateValue]
    target: Optional[StateValue]
    conditions: List[Callable]
    on_error: Optional[StateValue]
    exception: Type[BaseException]


def _validate(source, target, conditions, on_error) -> List[StateValue]:
    if isinstance(source, ALLOWED_TYPES):
        source = [source]
    if not isinstance(source, list) or not all(isinstance(item, ALLOWED_TYPES) for item in source):
        raise ValueError("Source can be a bool, int, string, Enum, or list")
    if target is not None and not isinstance(target, ALLOWED_TYPES):
        raise ValueError("Target needs to be a bool, int, string, Enum or None")
    if not isinstance(conditions, list) or not all(isinstance(c, types.FunctionType) for c in conditions):
        raise ValueError("conditions must be a list of functions")
    if on_error is not None and not isinstance(on_error, ALLOWED_TYPES):
        raise ValueError("on_error needs to be a bool, int, string or Enum")
    return source


def transition(source, target, conditions=None, on_error=None, exception: Type[BaseException] = Exception):
    """Guard a method with a state transition; works on plain and coroutine methods alike.

    The call is refused unless the machine is in one of the source states and every condition holds.
    On success the machine enters target (stays put when target is None). When the method raises
    `exception` and on_error is set, the machine enters on_error and the exception propagates.
    """
    conditions = conditions or []
    source = _validate(source, target, conditions, on_error)

    def transition_decorator(func):
        spec = Transition(func.__name__, source, target, conditions, on_error, exception)

        def check(machine, args, kwargs):
            if machine.state not in spec.source:
                raise InvalidStartState(spec.name, machine.state, spec.source)
            unmet = [c for c in spec.conditions if not c(machine, *args, **kwargs)]
            if unmet:
                raise ConditionsNotMet(unmet)

        def finish(machine):
            machine._enter(spec.target if spec.target is not None else machine.state, spec.name)

        def fail(machine):
            if spec.on_error is not None:
                machine._enter(spec.on_error, f"{spec.name} failed")

        if asyncio.iscoroutinefunction(func):

            @functools.wraps(func)
            async def _async_wrapper(machine, *args, **kwargs) -> Any:
                check(machine, args, kwargs)
                try:
                    result = await func(machine, *args, **kwargs)
                except spec.exception:
                    fail(machine)
                    raise
                finish(machine)
                return result

            _async_wrapper.__fsm = spec
            return _async_wrapper

        @functools.wraps(func)
        def _wrapper(machine, *args, **kwargs) -> Any:
            check(machine, args, kwargs)
            try:
                result = func(machine, *args, **kwargs)
            except spec.exception:
                fail(machine)
                raise
            finish(machine)
            return result

        _wrapper.__fsm = spec
        return _wrapper

    return transition_decorator
