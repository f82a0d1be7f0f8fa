//! Parity-check matrices of the (3,4)-regular LDPC codes used as the first
//! factor of the non-topological family. Each has full row rank.

pub(crate) const LDPC_16_4_6: &[&str] = &[
    "0001100000010010",
    "1000000011100000",
    "0010000001001001",
    "0001001000001001",
    "1000100010000010",
    "1100000000000110",
    "0100000100100100",
    "0000011011000000",
    "0010001000010100",
    "0000010100101000",
    "0000110100010000",
    "0111000000000001",
];

pub(crate) const LDPC_20_5_8: &[&str] = &[
    "00011000000100000001",
    "10000000111000000000",
    "00100000010010000001",
    "00010010000010010000",
    "00001000100000101000",
    "11000000000001100000",
    "00000001000001001010",
    "00000010110000000100",
    "00100010000101000000",
    "00000101001010000000",
    "00001101000000000100",
    "01110000000000010000",
    "11000100000000010000",
    "00000000001100001010",
    "00000000000000100111",
];

pub(crate) const LDPC_24_6_10: &[&str] = &[
    "000010000000000001100010",
    "000100010100000000000100",
    "000001000000000100101000",
    "000000100001000110000000",
    "001010000100000000000010",
    "100010000010000000010000",
    "000000001000010000011000",
    "000100000000000011000100",
    "010001010000100000000000",
    "000000000011001000100000",
    "000100001000010000000001",
    "010000000000100001010000",
    "101001000000001000000000",
    "000000000000010110000001",
    "000000101000100000000001",
    "001000000001001000000100",
    "110000000000000000001010",
    "000000110110000000000000",
];
