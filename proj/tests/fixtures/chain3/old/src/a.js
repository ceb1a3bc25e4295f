const b = require('./b');

function top(x) {
  return b.viaF(x) + 1;
}

function other(x) {
  return b.viaG(x) + 1;
}

module.exports = { top, other };
