const c = require('./c');

const viaF = (x) => c.f(x) * 10;
const viaG = (x) => c.g(x) * 10;

module.exports = { viaF, viaG };
